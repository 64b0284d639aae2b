#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "wvar/series.hpp"

namespace wvar {

/// RBF kernel k(x,y) = exp(-gamma * (x-y)^2), gamma > 0.
struct KernelSpec {
  double gamma = 1.0;
};

/// Breakpoints are exclusive segment ends: segments are [0,t_1), [t_1,t_2),
/// ..., [t_K,n). Strictly increasing, all in (0, n).
struct Segmentation {
  std::vector<std::size_t> breakpoints;
  std::size_t series_length = 0;

  std::size_t segment_count() const { return breakpoints.size() + 1; }
  std::pair<std::size_t, std::size_t> segment(std::size_t t) const;
  std::vector<std::size_t> segment_lengths() const;
  std::vector<std::size_t> segment_of_each() const;
  void validate(std::size_t min_segment_length) const;
};

struct SegmentationResult {
  Segmentation segmentation;
  double total_cost = 0.0;           // V(T), sum of per-segment kernel costs
  double penalized_objective = 0.0;  // total_cost + penalty_weight * |T|
};

/// gamma = 1 / median of squared pairwise distances. All pairs when
/// n <= max_sample_points, otherwise a seeded uniform subsample of
/// max_sample_points observations. Falls back to gamma = 1 when the median
/// distance is zero.
KernelSpec median_heuristic_bandwidth(const ReturnSeries& r, std::size_t max_sample_points = 1000);

/// Within-segment RBF dispersion over [a,b):
///   (b-a) - (1/(b-a)) * sum_{s,t in [a,b)} exp(-gamma (r_s - r_t)^2).
/// Always in [0, b-a). Throws on an empty segment.
double kernel_cost(const ReturnSeries& r, std::size_t a, std::size_t b, const KernelSpec& k);

/// Exact minimizer of sum_k cost(segment_k) + penalty_weight * |breakpoints|
/// over all segmentations with every segment >= min_segment_length.
/// Optimal-partitioning dynamic programming over row-prefix sums of the Gram
/// matrix, with pruning of dominated split candidates; O(n^2) time and
/// memory, supported up to n = 20000. Ties resolved toward fewer
/// breakpoints, then the lexicographically smallest breakpoint list.
SegmentationResult detect_changepoints(const ReturnSeries& r, double penalty_weight,
                                       const KernelSpec& k, std::size_t min_segment_length = 2);

/// Test oracle: enumerates every admissible breakpoint set (n <= 64) and
/// returns the global minimizer under the same tie-breaking rule. When
/// runner_up_objective is non-null it receives the best objective over all
/// other breakpoint sets (infinity if the empty segmentation is the only
/// candidate), which tests use to detect non-unique optima.
SegmentationResult exhaustive_segmentation_oracle(const ReturnSeries& r, double penalty_weight,
                                                  const KernelSpec& k,
                                                  std::size_t min_segment_length = 2,
                                                  double* runner_up_objective = nullptr);

}  // namespace wvar
