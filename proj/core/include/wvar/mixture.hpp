#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "wvar/series.hpp"

namespace wvar {

struct GaussianComponent {
  double mu = 0.0;
  double sigma = 1.0;  // > 0
};

double normal_pdf(double x, const GaussianComponent& g);
double normal_log_pdf(double x, const GaussianComponent& g);

/// Phi((x-mu)/sigma) via erfc; absolute error <= 1e-15.
double normal_cdf(double x, const GaussianComponent& g);

/// One market scenario: a Gaussian mixture with weights on the simplex.
struct ScenarioComponent {
  std::vector<double> inner_weights;
  std::vector<GaussianComponent> gaussians;

  std::size_t component_count() const { return gaussians.size(); }
  double mean() const;
  double variance() const;
};

double scenario_pdf(const ScenarioComponent& s, double x);
double scenario_log_pdf(const ScenarioComponent& s, double x);
double scenario_cdf(const ScenarioComponent& s, double x);

/// Single-layer view of one segment: weights are the products
/// beta_j * alpha_{j,i}, one entry per (scenario, inner) pair.
struct FlattenedMixture {
  std::vector<double> weights;
  std::vector<GaussianComponent> gaussians;
};

double flattened_pdf(const FlattenedMixture& f, double x);
double flattened_cdf(const FlattenedMixture& f, double x);

/// Scenario set shared across segments; outer weights vary per segment.
/// segment_weights is N_seg x K2 with rows on the simplex.
struct TwoLayerMixture {
  std::vector<ScenarioComponent> scenarios;
  Eigen::MatrixXd segment_weights;
  std::vector<std::size_t> segment_lengths;

  std::size_t scenario_count() const { return scenarios.size(); }
  std::size_t segment_count() const { return segment_lengths.size(); }
  std::size_t total_observations() const;
  void validate() const;
};

/// Resolves label switching: inner components sorted by (sigma, mu),
/// scenarios by (variance, mean), segment_weights columns permuted to match.
void canonicalize(TwoLayerMixture& m);

/// Validates invariants and canonicalizes.
TwoLayerMixture make_two_layer_mixture(std::vector<ScenarioComponent> scenarios,
                                       Eigen::MatrixXd segment_weights,
                                       std::vector<std::size_t> segment_lengths);

double segment_pdf(const TwoLayerMixture& m, std::size_t t, double x);
double segment_log_pdf(const TwoLayerMixture& m, std::size_t t, double x);
double segment_cdf(const TwoLayerMixture& m, std::size_t t, double x);

FlattenedMixture flatten(const TwoLayerMixture& m, std::size_t t);

/// Latent (segment, scenario, inner) identity of each draw.
struct LabelTrace {
  std::vector<std::size_t> segment;
  std::vector<std::size_t> scenario;
  std::vector<std::size_t> inner;
};

struct SampleResult {
  ReturnSeries series;
  std::optional<LabelTrace> labels;
};

/// Draws per_segment_counts[t] observations from segment t's distribution.
/// Deterministic for a fixed seed. Labels retained only when requested so
/// fitting code cannot see them by accident.
SampleResult sample(const TwoLayerMixture& m, std::uint64_t seed,
                    const std::vector<std::size_t>& per_segment_counts, bool keep_labels = false);

}  // namespace wvar
