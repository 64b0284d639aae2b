#include "wvar/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace wvar {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kLogInvSqrt2Pi = -0.91893853320467274178;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSimplexTol = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const Date kSyntheticEpoch{2000, 1, 1};

void check_gaussian(const GaussianComponent& g) {
  if (!(g.sigma > 0.0) || !std::isfinite(g.sigma) || !std::isfinite(g.mu)) {
    throw std::invalid_argument("gaussian component needs finite mu and sigma > 0");
  }
}

void check_simplex(const double* w, std::size_t k, const char* what) {
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(w[i] >= 0.0)) {
      throw std::invalid_argument(std::string(what) + ": negative weight");
    }
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw std::invalid_argument(std::string(what) + ": weights sum to " + std::to_string(sum) +
                                ", expected 1");
  }
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

// First index i with u < cumulative weight; the final index catches
// rounding at the top of the simplex.
template <typename Weights>
std::size_t pick_index(const Weights& w, std::size_t k, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  return k - 1;
}

}  // namespace

double normal_pdf(double x, const GaussianComponent& g) {
  const double z = (x - g.mu) / g.sigma;
  return kInvSqrt2Pi / g.sigma * std::exp(-0.5 * z * z);
}

double normal_log_pdf(double x, const GaussianComponent& g) {
  const double z = (x - g.mu) / g.sigma;
  return kLogInvSqrt2Pi - std::log(g.sigma) - 0.5 * z * z;
}

double normal_cdf(double x, const GaussianComponent& g) {
  const double z = (x - g.mu) / g.sigma;
  return 0.5 * std::erfc(-z * kInvSqrt2);
}

double ScenarioComponent::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    m += inner_weights[i] * gaussians[i].mu;
  }
  return m;
}

double ScenarioComponent::variance() const {
  const double m = mean();
  double second = 0.0;
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    second += inner_weights[i] *
              (gaussians[i].sigma * gaussians[i].sigma + gaussians[i].mu * gaussians[i].mu);
  }
  return second - m * m;
}

double scenario_pdf(const ScenarioComponent& s, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
    acc += s.inner_weights[i] * normal_pdf(x, s.gaussians[i]);
  }
  return acc;
}

double scenario_log_pdf(const ScenarioComponent& s, double x) {
  std::vector<double> terms;
  terms.reserve(s.gaussians.size());
  for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
    terms.push_back(s.inner_weights[i] > 0.0
                        ? std::log(s.inner_weights[i]) + normal_log_pdf(x, s.gaussians[i])
                        : kNegInf);
  }
  return log_sum_exp(terms);
}

double scenario_cdf(const ScenarioComponent& s, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
    acc += s.inner_weights[i] * normal_cdf(x, s.gaussians[i]);
  }
  return acc;
}

double flattened_pdf(const FlattenedMixture& f, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.gaussians.size(); ++i) {
    acc += f.weights[i] * normal_pdf(x, f.gaussians[i]);
  }
  return acc;
}

double flattened_cdf(const FlattenedMixture& f, double x) {
  double acc = 0.0;
  for (std::size_t i = 0; i < f.gaussians.size(); ++i) {
    acc += f.weights[i] * normal_cdf(x, f.gaussians[i]);
  }
  return acc;
}

std::size_t TwoLayerMixture::total_observations() const {
  return std::accumulate(segment_lengths.begin(), segment_lengths.end(), std::size_t{0});
}

void TwoLayerMixture::validate() const {
  if (scenarios.empty()) {
    throw std::invalid_argument("two-layer mixture: need at least one scenario");
  }
  if (segment_lengths.empty()) {
    throw std::invalid_argument("two-layer mixture: need at least one segment");
  }
  for (const auto& s : scenarios) {
    if (s.gaussians.empty() || s.gaussians.size() != s.inner_weights.size()) {
      throw std::invalid_argument("scenario: inner weights and gaussians must match and be non-empty");
    }
    check_simplex(s.inner_weights.data(), s.inner_weights.size(), "scenario inner weights");
    for (const auto& g : s.gaussians) check_gaussian(g);
  }
  if (segment_weights.rows() != static_cast<Eigen::Index>(segment_lengths.size()) ||
      segment_weights.cols() != static_cast<Eigen::Index>(scenarios.size())) {
    throw std::invalid_argument("two-layer mixture: segment_weights must be N_seg x K2");
  }
  for (Eigen::Index t = 0; t < segment_weights.rows(); ++t) {
    std::vector<double> row(segment_weights.row(t).begin(), segment_weights.row(t).end());
    check_simplex(row.data(), row.size(), "segment weights row");
  }
  for (std::size_t length : segment_lengths) {
    if (length == 0) {
      throw std::invalid_argument("two-layer mixture: empty segment");
    }
  }
}

void canonicalize(TwoLayerMixture& m) {
  for (auto& s : m.scenarios) {
    std::vector<std::size_t> order(s.gaussians.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(s.gaussians[a].sigma, s.gaussians[a].mu, s.inner_weights[a]) <
             std::tie(s.gaussians[b].sigma, s.gaussians[b].mu, s.inner_weights[b]);
    });
    ScenarioComponent sorted;
    sorted.inner_weights.reserve(order.size());
    sorted.gaussians.reserve(order.size());
    for (std::size_t idx : order) {
      sorted.inner_weights.push_back(s.inner_weights[idx]);
      sorted.gaussians.push_back(s.gaussians[idx]);
    }
    s = std::move(sorted);
  }

  std::vector<std::size_t> order(m.scenarios.size());
  std::iota(order.begin(), order.end(), 0);
  const auto scenario_key = [&](std::size_t j) {
    return std::make_pair(m.scenarios[j].variance(), m.scenarios[j].mean());
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = scenario_key(a);
    const auto kb = scenario_key(b);
    if (ka != kb) return ka < kb;
    // Full parameter comparison keeps exact ties deterministic.
    const auto& sa = m.scenarios[a];
    const auto& sb = m.scenarios[b];
    for (std::size_t i = 0; i < std::min(sa.gaussians.size(), sb.gaussians.size()); ++i) {
      const auto ta = std::tie(sa.gaussians[i].sigma, sa.gaussians[i].mu, sa.inner_weights[i]);
      const auto tb = std::tie(sb.gaussians[i].sigma, sb.gaussians[i].mu, sb.inner_weights[i]);
      if (ta != tb) return ta < tb;
    }
    return sa.gaussians.size() < sb.gaussians.size();
  });

  std::vector<ScenarioComponent> scenarios;
  scenarios.reserve(order.size());
  Eigen::MatrixXd weights(m.segment_weights.rows(), m.segment_weights.cols());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    scenarios.push_back(std::move(m.scenarios[order[pos]]));
    weights.col(static_cast<Eigen::Index>(pos)) =
        m.segment_weights.col(static_cast<Eigen::Index>(order[pos]));
  }
  m.scenarios = std::move(scenarios);
  m.segment_weights = std::move(weights);
}

TwoLayerMixture make_two_layer_mixture(std::vector<ScenarioComponent> scenarios,
                                       Eigen::MatrixXd segment_weights,
                                       std::vector<std::size_t> segment_lengths) {
  TwoLayerMixture m;
  m.scenarios = std::move(scenarios);
  m.segment_weights = std::move(segment_weights);
  m.segment_lengths = std::move(segment_lengths);
  m.validate();
  canonicalize(m);
  return m;
}

double segment_pdf(const TwoLayerMixture& m, std::size_t t, double x) {
  if (t >= m.segment_count()) {
    throw std::out_of_range("segment index out of range");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < m.scenarios.size(); ++j) {
    acc += m.segment_weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) *
           scenario_pdf(m.scenarios[j], x);
  }
  return acc;
}

double segment_log_pdf(const TwoLayerMixture& m, std::size_t t, double x) {
  if (t >= m.segment_count()) {
    throw std::out_of_range("segment index out of range");
  }
  std::vector<double> terms;
  for (std::size_t j = 0; j < m.scenarios.size(); ++j) {
    const double beta = m.segment_weights(static_cast<Eigen::Index>(t),
                                          static_cast<Eigen::Index>(j));
    const auto& s = m.scenarios[j];
    for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
      const double w = beta * s.inner_weights[i];
      terms.push_back(w > 0.0 ? std::log(w) + normal_log_pdf(x, s.gaussians[i]) : kNegInf);
    }
  }
  return log_sum_exp(terms);
}

double segment_cdf(const TwoLayerMixture& m, std::size_t t, double x) {
  if (t >= m.segment_count()) {
    throw std::out_of_range("segment index out of range");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < m.scenarios.size(); ++j) {
    acc += m.segment_weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) *
           scenario_cdf(m.scenarios[j], x);
  }
  return acc;
}

FlattenedMixture flatten(const TwoLayerMixture& m, std::size_t t) {
  if (t >= m.segment_count()) {
    throw std::out_of_range("segment index out of range");
  }
  FlattenedMixture f;
  for (std::size_t j = 0; j < m.scenarios.size(); ++j) {
    const double beta = m.segment_weights(static_cast<Eigen::Index>(t),
                                          static_cast<Eigen::Index>(j));
    const auto& s = m.scenarios[j];
    for (std::size_t i = 0; i < s.gaussians.size(); ++i) {
      f.weights.push_back(beta * s.inner_weights[i]);
      f.gaussians.push_back(s.gaussians[i]);
    }
  }
  return f;
}

SampleResult sample(const TwoLayerMixture& m, std::uint64_t seed,
                    const std::vector<std::size_t>& per_segment_counts, bool keep_labels) {
  m.validate();
  if (per_segment_counts.size() != m.segment_count()) {
    throw std::invalid_argument("per-segment counts must have one entry per segment");
  }

  SampleResult out;
  if (keep_labels) out.labels.emplace();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> standard(0.0, 1.0);

  std::size_t idx = 0;
  for (std::size_t t = 0; t < per_segment_counts.size(); ++t) {
    const auto row = m.segment_weights.row(static_cast<Eigen::Index>(t));
    for (std::size_t c = 0; c < per_segment_counts[t]; ++c, ++idx) {
      const std::size_t j = pick_index(row, m.scenario_count(), unif(rng));
      const auto& s = m.scenarios[j];
      const std::size_t i = pick_index(s.inner_weights, s.inner_weights.size(), unif(rng));
      const auto& g = s.gaussians[i];
      out.series.values.push_back(g.mu + g.sigma * standard(rng));
      out.series.dates.push_back(kSyntheticEpoch.plus_days(static_cast<int>(idx)));
      if (keep_labels) {
        out.labels->segment.push_back(t);
        out.labels->scenario.push_back(j);
        out.labels->inner.push_back(i);
      }
    }
  }
  return out;
}

}  // namespace wvar
