#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "wvar/mixture.hpp"
#include "wvar/segmentation.hpp"
#include "wvar/series.hpp"

namespace wvar {

/// Posterior membership over (scenario, inner) pairs. Column index j*K1 + i.
/// Rows sum to 1.
struct Responsibilities {
  Eigen::MatrixXd eta;
  std::vector<std::size_t> segment_of;
};

struct FitConfig {
  std::size_t k2 = 5;
  std::size_t k1 = 3;
  std::size_t max_iters = 500;
  double rel_tol = 1e-8;
  std::size_t restarts = 10;
  std::uint64_t seed = 42;
  double variance_floor_factor = 1e-6;

  void validate() const;
};

struct FitResult {
  TwoLayerMixture model;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restart_index = 0;
};

/// Per-iteration observed-data log-likelihood of one EM run.
struct EmTrace {
  std::vector<double> log_likelihoods;
};

/// Seeded k-means++-style center selection over the pooled returns; sigma
/// from within-cluster spread (floored), alpha and beta rows uniform.
/// Deterministic given (cfg.seed, restart).
TwoLayerMixture init_model(const ReturnSeries& r, const Segmentation& seg, const FitConfig& cfg,
                           std::size_t restart);

/// Log-space posterior over (j,i) using the beta row of each observation's
/// segment.
Responsibilities e_step(const ReturnSeries& r, const Segmentation& seg, const TwoLayerMixture& m);

/// Closed-form maximizers of the expected complete-data log-likelihood:
/// weighted moments for (mu, sigma^2) with a variance floor, responsibility
/// mass ratios for alpha and the per-segment beta rows. Collapsed components
/// (effective count below 1e-8) are re-seeded at a random observation.
TwoLayerMixture m_step(const ReturnSeries& r, const Segmentation& seg, const Responsibilities& resp,
                       const FitConfig& cfg);

/// Sum over observations of log segment density, accumulated in log space.
double log_likelihood(const ReturnSeries& r, const Segmentation& seg, const TwoLayerMixture& m);

/// One EM run from a caller-supplied starting model. The result is not
/// canonicalized so trajectories can be compared component-by-component.
FitResult run_em(const ReturnSeries& r, const Segmentation& seg, TwoLayerMixture start,
                 const FitConfig& cfg, std::uint64_t rescue_seed, EmTrace* trace = nullptr);

/// cfg.restarts independent runs (restart k seeds its own generator with
/// cfg.seed + k); returns the best final log-likelihood, canonicalized.
FitResult fit(const ReturnSeries& r, const Segmentation& seg, const FitConfig& cfg);

}  // namespace wvar
