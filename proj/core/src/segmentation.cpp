#include "wvar/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace wvar {

namespace {

constexpr std::size_t kGramCeiling = 20000;
constexpr std::uint64_t kMedianHeuristicSeed = 0x9e3779b97f4a7c15ULL;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Kept candidates are re-checked rather than dropped when costs tie this
// closely, so rounding in the superadditivity bound cannot lose the optimum.
constexpr double kPruneSlack = 1e-9;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// P(i,j) = sum_{q<=j} k(r_i, r_q); any row slice sum is then O(1).
RowMajorMatrix gram_row_prefix(const std::vector<double>& x, double gamma) {
  const auto n = static_cast<Eigen::Index>(x.size());
  RowMajorMatrix p(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
      const double k = std::exp(-gamma * d * d);
      p(i, j) = k;
      p(j, i) = k;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += p(i, j);
      p(i, j) = acc;
    }
  }
  return p;
}

void check_kernel(const KernelSpec& k) {
  if (!(k.gamma > 0.0) || !std::isfinite(k.gamma)) {
    throw std::invalid_argument("kernel bandwidth gamma must be positive");
  }
}

}  // namespace

std::pair<std::size_t, std::size_t> Segmentation::segment(std::size_t t) const {
  if (t >= segment_count()) {
    throw std::out_of_range("segment index " + std::to_string(t) + " out of range");
  }
  const std::size_t begin = (t == 0) ? 0 : breakpoints[t - 1];
  const std::size_t end = (t == breakpoints.size()) ? series_length : breakpoints[t];
  return {begin, end};
}

std::vector<std::size_t> Segmentation::segment_lengths() const {
  std::vector<std::size_t> lengths(segment_count());
  for (std::size_t t = 0; t < segment_count(); ++t) {
    const auto [a, b] = segment(t);
    lengths[t] = b - a;
  }
  return lengths;
}

std::vector<std::size_t> Segmentation::segment_of_each() const {
  std::vector<std::size_t> owner(series_length);
  for (std::size_t t = 0; t < segment_count(); ++t) {
    const auto [a, b] = segment(t);
    std::fill(owner.begin() + static_cast<std::ptrdiff_t>(a),
              owner.begin() + static_cast<std::ptrdiff_t>(b), t);
  }
  return owner;
}

void Segmentation::validate(std::size_t min_segment_length) const {
  if (series_length == 0) {
    throw std::invalid_argument("segmentation: empty series");
  }
  std::size_t prev = 0;
  for (std::size_t bk : breakpoints) {
    if (bk <= prev || bk >= series_length) {
      throw std::invalid_argument("segmentation: breakpoints must be strictly increasing in (0, n)");
    }
    if (bk - prev < min_segment_length) {
      throw std::invalid_argument("segmentation: segment shorter than " +
                                  std::to_string(min_segment_length));
    }
    prev = bk;
  }
  if (series_length - prev < min_segment_length) {
    throw std::invalid_argument("segmentation: final segment shorter than " +
                                std::to_string(min_segment_length));
  }
}

KernelSpec median_heuristic_bandwidth(const ReturnSeries& r, std::size_t max_sample_points) {
  const std::size_t n = r.size();
  if (n < 2) {
    throw std::invalid_argument("median heuristic needs at least 2 observations");
  }
  std::vector<double> points;
  if (n <= max_sample_points || max_sample_points < 2) {
    points = r.values;
  } else {
    points.reserve(max_sample_points);
    std::mt19937_64 rng(kMedianHeuristicSeed);
    std::sample(r.values.begin(), r.values.end(), std::back_inserter(points), max_sample_points,
                rng);
  }
  std::vector<double> sq_dists;
  sq_dists.reserve(points.size() * (points.size() - 1) / 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double d = points[i] - points[j];
      sq_dists.push_back(d * d);
    }
  }
  const std::size_t mid = sq_dists.size() / 2;
  std::nth_element(sq_dists.begin(), sq_dists.begin() + static_cast<std::ptrdiff_t>(mid),
                   sq_dists.end());
  const double median = sq_dists[mid];
  KernelSpec spec;
  spec.gamma = (median > 0.0) ? 1.0 / median : 1.0;
  return spec;
}

double kernel_cost(const ReturnSeries& r, std::size_t a, std::size_t b, const KernelSpec& k) {
  check_kernel(k);
  if (a >= b || b > r.size()) {
    throw std::invalid_argument("kernel_cost: empty or out-of-range segment [" +
                                std::to_string(a) + ", " + std::to_string(b) + ")");
  }
  const double m = static_cast<double>(b - a);
  double block = 0.0;
  for (std::size_t i = a; i < b; ++i) {
    block += 1.0;
    for (std::size_t j = i + 1; j < b; ++j) {
      const double d = r.values[i] - r.values[j];
      block += 2.0 * std::exp(-k.gamma * d * d);
    }
  }
  return m - block / m;
}

SegmentationResult detect_changepoints(const ReturnSeries& r, double penalty_weight,
                                       const KernelSpec& k, std::size_t min_segment_length) {
  check_kernel(k);
  if (!(penalty_weight > 0.0) || !std::isfinite(penalty_weight)) {
    throw std::invalid_argument("penalty_weight must be positive");
  }
  if (min_segment_length < 1) {
    throw std::invalid_argument("min_segment_length must be >= 1");
  }
  const std::size_t n = r.size();
  const std::size_t len = min_segment_length;
  if (n < 2 * len) {
    throw std::runtime_error("series too short: need at least " + std::to_string(2 * len) +
                             " observations");
  }
  if (n > kGramCeiling) {
    throw std::runtime_error("series longer than the supported ceiling of " +
                             std::to_string(kGramCeiling));
  }

  const RowMajorMatrix prefix = gram_row_prefix(r.values, k.gamma);
  // sum_{q in [a,b)} k(r_i, r_q)
  const auto row_range = [&](std::size_t i, std::size_t a, std::size_t b) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double hi = prefix(ii, static_cast<Eigen::Index>(b - 1));
    return (a == 0) ? hi : hi - prefix(ii, static_cast<Eigen::Index>(a - 1));
  };

  // Suffix DP over segment starts: value[p] is the optimal
  //   sum of costs + penalty * (#breakpoints)
  // for [p, n). Candidates u are the next breakpoint; the close option ends
  // the series with segment [p, n). Processing p in decreasing order lets
  // the closing block sum grow one row at a time.
  const std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<double> value(n + 1, kInf);
  std::vector<std::size_t> min_breaks(n + 1, none);
  std::vector<double> close_cost(n + 1, kInf);
  std::vector<double> vals(n + 1, kInf);
  // Candidate u is skipped at step p when p <= prune_limit[u]; a candidate
  // marked dominated at step p stays usable until p - len (the delay keeps
  // the minimum-segment-length constraint exact).
  std::vector<std::ptrdiff_t> prune_limit(n + 1, -1);

  const auto is_valid_start = [&](std::size_t p) { return p == 0 || (p >= len && p + len <= n); };

  double closing_block = 0.0;  // sum_{i,j in [p,n)} k(r_i, r_j)
  std::size_t hi = n - len;    // largest candidate still worth scanning

  for (std::size_t p = n; p-- > 0;) {
    closing_block += 2.0 * ((p + 1 < n) ? row_range(p, p + 1, n) : 0.0) + 1.0;
    if (!is_valid_start(p)) continue;

    close_cost[p] = static_cast<double>(n - p) - closing_block / static_cast<double>(n - p);

    while (hi > p + len && prune_limit[hi] >= static_cast<std::ptrdiff_t>(p)) --hi;
    const std::size_t scan_hi = std::min(hi, n - len);

    double best = close_cost[p];
    std::size_t best_breaks = 0;
    if (p + len <= scan_hi) {
      // Incremental block sum over [p, u) as u grows.
      double block = 0.0;
      for (std::size_t i = p; i < p + len; ++i) block += row_range(i, p, p + len);
      for (std::size_t u = p + len; u <= scan_hi; ++u) {
        const double cost = static_cast<double>(u - p) - block / static_cast<double>(u - p);
        vals[u] = value[u] + cost;
        const double candidate = vals[u] + penalty_weight;
        const std::size_t breaks = min_breaks[u] + 1;
        if (candidate < best || (candidate == best && breaks < best_breaks)) {
          best = candidate;
          best_breaks = breaks;
        }
        if (u < scan_hi) block += 2.0 * row_range(u, p, u) + 1.0;
      }
    }
    value[p] = best;
    min_breaks[p] = best_breaks;

    // Dominated candidates cannot enter any optimum whose previous
    // breakpoint lies at or below p - len.
    if (p >= len) {
      for (std::size_t u = p + len; u <= scan_hi; ++u) {
        if (vals[u] > value[p] + kPruneSlack) {
          prune_limit[u] =
              std::max(prune_limit[u], static_cast<std::ptrdiff_t>(p) -
                                           static_cast<std::ptrdiff_t>(len));
        }
      }
    }
  }

  // Forward reconstruction; scanning u upward yields the lexicographically
  // smallest breakpoint list among optima with the fewest breakpoints.
  Segmentation seg;
  seg.series_length = n;
  std::size_t p = 0;
  while (true) {
    if (close_cost[p] == value[p] && min_breaks[p] == 0) break;
    bool advanced = false;
    double block = 0.0;
    for (std::size_t i = p; i < p + len; ++i) block += row_range(i, p, p + len);
    for (std::size_t u = p + len; u + len <= n; ++u) {
      const double cost = static_cast<double>(u - p) - block / static_cast<double>(u - p);
      const double candidate = (value[u] + cost) + penalty_weight;
      if (candidate == value[p] && min_breaks[u] + 1 == min_breaks[p]) {
        seg.breakpoints.push_back(u);
        p = u;
        advanced = true;
        break;
      }
      block += 2.0 * row_range(u, p, u) + 1.0;
    }
    if (!advanced) {
      throw std::logic_error("changepoint reconstruction failed to match the DP value");
    }
  }

  SegmentationResult result;
  result.segmentation = seg;
  result.total_cost = 0.0;
  for (std::size_t t = 0; t < seg.segment_count(); ++t) {
    const auto [a, b] = seg.segment(t);
    result.total_cost += kernel_cost(r, a, b, k);
  }
  result.penalized_objective =
      result.total_cost + penalty_weight * static_cast<double>(seg.breakpoints.size());
  return result;
}

SegmentationResult exhaustive_segmentation_oracle(const ReturnSeries& r, double penalty_weight,
                                                  const KernelSpec& k,
                                                  std::size_t min_segment_length,
                                                  double* runner_up_objective) {
  check_kernel(k);
  const std::size_t n = r.size();
  const std::size_t len = min_segment_length;
  if (n > 64) {
    throw std::runtime_error("oracle enumeration is limited to n <= 64");
  }
  if (len < 1 || n < 2 * len) {
    throw std::runtime_error("series too short for the requested segment length");
  }

  // Cost table through the public kernel_cost so the oracle and the DP
  // report objectives in identical arithmetic.
  std::vector<std::vector<double>> cost(n + 1, std::vector<double>(n + 1, kInf));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + len; b <= n; ++b) {
      cost[a][b] = kernel_cost(r, a, b, k);
    }
  }

  double best_obj = kInf;
  std::size_t best_breaks = 0;
  std::vector<std::size_t> best_list;
  double runner_up = kInf;
  std::vector<std::size_t> chosen;

  const auto consider = [&](double obj) {
    const bool better =
        obj < best_obj || (obj == best_obj && (chosen.size() < best_breaks ||
                                               (chosen.size() == best_breaks &&
                                                std::lexicographical_compare(
                                                    chosen.begin(), chosen.end(),
                                                    best_list.begin(), best_list.end()))));
    if (better) {
      if (std::isfinite(best_obj)) runner_up = std::min(runner_up, best_obj);
      best_obj = obj;
      best_breaks = chosen.size();
      best_list = chosen;
    } else {
      runner_up = std::min(runner_up, obj);
    }
  };

  // DFS over breakpoint positions; segment costs accumulate left to right.
  const auto recurse = [&](auto&& self, std::size_t start, double acc) -> void {
    consider((acc + cost[start][n]) + penalty_weight * static_cast<double>(chosen.size()));
    for (std::size_t u = start + len; u + len <= n; ++u) {
      chosen.push_back(u);
      self(self, u, acc + cost[start][u]);
      chosen.pop_back();
    }
  };
  recurse(recurse, 0, 0.0);

  SegmentationResult result;
  result.segmentation.series_length = n;
  result.segmentation.breakpoints = best_list;
  result.total_cost = 0.0;
  for (std::size_t t = 0; t < result.segmentation.segment_count(); ++t) {
    const auto [a, b] = result.segmentation.segment(t);
    result.total_cost += cost[a][b];
  }
  result.penalized_objective =
      result.total_cost + penalty_weight * static_cast<double>(best_list.size());
  if (runner_up_objective != nullptr) {
    *runner_up_objective = runner_up;
  }
  return result;
}

}  // namespace wvar
