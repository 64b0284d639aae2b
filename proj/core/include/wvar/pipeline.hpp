#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wvar/em.hpp"
#include "wvar/risk.hpp"
#include "wvar/segmentation.hpp"
#include "wvar/series.hpp"

namespace wvar {

struct EmitFlags {
  bool json = true;
  bool csv = true;
  bool svg = true;
};

/// Full-pipeline configuration. The defaults are the reporting protocol the
/// tool is built around: penalty 2.5, K2 = 5, K1 = 3, alpha = 0.95,
/// median-heuristic bandwidth.
struct RunConfig {
  std::filesystem::path input;
  double penalty_weight = 2.5;
  std::size_t k2 = 5;
  std::size_t k1 = 3;
  double alpha = 0.95;
  std::optional<double> gamma;  // unset = median heuristic
  std::size_t min_segment_length = 2;
  std::size_t restarts = 10;
  std::size_t max_iters = 500;
  double rel_tol = 1e-8;
  std::uint64_t seed = 42;
  double variance_floor_factor = 1e-6;
  std::filesystem::path out_dir = ".";
  EmitFlags emit;

  FitConfig fit_config() const;
};

/// Error carrying the pipeline stage that failed.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& message);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineReport {
  RunConfig config;
  std::size_t n_prices = 0;
  std::size_t n_returns = 0;
  double gamma_used = 0.0;
  SegmentationResult segmentation;
  FitResult fit;
  RiskReport risk;
  double empirical_var_value = 0.0;
  OverestimationCheck one_layer;
};

/// load -> returns -> changepoints -> EM fit -> VaR/WVaR/BVaR. Writes
/// report.json / segments.csv / figure.svg into cfg.out_dir per the emit
/// flags. Any stage failure is rethrown as StageError with the stage name.
PipelineReport run_pipeline(const RunConfig& cfg);

std::string pipeline_report_to_json(const PipelineReport& rep);

/// Samples returns from a serialized model and writes a synthetic price CSV
/// (load_prices schema), integrating from 100.0. Empty counts means the
/// model's own segment lengths.
void simulate(const std::filesystem::path& model_json_path, std::vector<std::size_t> counts,
              std::uint64_t seed, const std::filesystem::path& out_csv);

/// Breakpoint indices (positions in the return series) with the date of the
/// first return of each new segment.
void write_segments_csv(const std::filesystem::path& path, const ReturnSeries& r,
                        const Segmentation& seg);

/// Parses the write_segments_csv format and validates against n.
Segmentation read_segments_csv(const std::filesystem::path& path, std::size_t series_length,
                               std::size_t min_segment_length);

}  // namespace wvar
