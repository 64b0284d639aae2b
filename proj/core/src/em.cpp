#include "wvar/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace wvar {

namespace {

constexpr double kCollapseThreshold = 1e-8;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double population_variance(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return acc / n;
}

void check_consistent(const ReturnSeries& r, const Segmentation& seg, const TwoLayerMixture& m) {
  if (seg.series_length != r.size()) {
    throw std::invalid_argument("segmentation does not match the series length");
  }
  if (m.segment_count() != seg.segment_count()) {
    throw std::invalid_argument("model segment count does not match the segmentation");
  }
}

std::size_t equal_inner_count(const TwoLayerMixture& m) {
  const std::size_t k1 = m.scenarios.front().component_count();
  for (const auto& s : m.scenarios) {
    if (s.component_count() != k1) {
      throw std::invalid_argument("estimator requires equal inner component counts per scenario");
    }
  }
  return k1;
}

struct LogWeights {
  // log(beta_j^(t) * alpha_{j,i}) per segment, column j*k1+i
  Eigen::MatrixXd table;
};

LogWeights log_weight_table(const TwoLayerMixture& m, std::size_t k1) {
  const auto n_seg = static_cast<Eigen::Index>(m.segment_count());
  const auto k2 = static_cast<Eigen::Index>(m.scenario_count());
  LogWeights lw;
  lw.table.resize(n_seg, k2 * static_cast<Eigen::Index>(k1));
  for (Eigen::Index t = 0; t < n_seg; ++t) {
    for (Eigen::Index j = 0; j < k2; ++j) {
      const double beta = m.segment_weights(t, j);
      const auto& s = m.scenarios[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < k1; ++i) {
        const double w = beta * s.inner_weights[i];
        lw.table(t, j * static_cast<Eigen::Index>(k1) + static_cast<Eigen::Index>(i)) =
            w > 0.0 ? std::log(w) : kNegInf;
      }
    }
  }
  return lw;
}

TwoLayerMixture m_step_impl(const ReturnSeries& r, const Segmentation& seg,
                            const Responsibilities& resp, const FitConfig& cfg,
                            std::mt19937_64& rescue_rng) {
  const std::size_t n = r.size();
  const std::size_t k2 = cfg.k2;
  const std::size_t k1 = cfg.k1;
  const auto cols = static_cast<Eigen::Index>(k2 * k1);
  if (resp.eta.rows() != static_cast<Eigen::Index>(n) || resp.eta.cols() != cols) {
    throw std::invalid_argument("responsibilities shape does not match (n, k2*k1)");
  }
  const std::size_t n_seg = seg.segment_count();

  const double var_r = population_variance(r.values);
  if (!(var_r > 0.0)) {
    throw std::invalid_argument("degenerate series: zero variance");
  }
  const double var_floor = cfg.variance_floor_factor * var_r;
  const double data_sd = std::sqrt(var_r);

  // Component-wise responsibility mass, split by segment and pooled.
  Eigen::MatrixXd seg_mass = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_seg), cols);
  for (std::size_t t = 0; t < n_seg; ++t) {
    const auto [a, b] = seg.segment(t);
    seg_mass.row(static_cast<Eigen::Index>(t)) =
        resp.eta.middleRows(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b - a))
            .colwise()
            .sum();
  }
  const Eigen::VectorXd mass = seg_mass.colwise().sum().transpose();

  // Weighted first and second moments.
  Eigen::VectorXd weighted_sum = Eigen::VectorXd::Zero(cols);
  for (std::size_t s = 0; s < n; ++s) {
    weighted_sum += resp.eta.row(static_cast<Eigen::Index>(s)).transpose() * r.values[s];
  }

  std::vector<GaussianComponent> components(k2 * k1);
  std::vector<bool> rescued(k2 * k1, false);
  for (std::size_t c = 0; c < k2 * k1; ++c) {
    const double m_c = mass(static_cast<Eigen::Index>(c));
    if (m_c < kCollapseThreshold) {
      // Collapsed: re-seed at a random observation, spread of the data.
      const std::size_t pick =
          std::uniform_int_distribution<std::size_t>(0, n - 1)(rescue_rng);
      components[c].mu = r.values[pick];
      components[c].sigma = std::max(data_sd, std::sqrt(var_floor));
      rescued[c] = true;
    } else {
      components[c].mu = weighted_sum(static_cast<Eigen::Index>(c)) / m_c;
    }
  }
  Eigen::VectorXd weighted_sq = Eigen::VectorXd::Zero(cols);
  for (std::size_t s = 0; s < n; ++s) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double d = r.values[s] - components[static_cast<std::size_t>(c)].mu;
      weighted_sq(c) += resp.eta(static_cast<Eigen::Index>(s), c) * d * d;
    }
  }
  for (std::size_t c = 0; c < k2 * k1; ++c) {
    if (rescued[c]) continue;
    const double variance =
        std::max(weighted_sq(static_cast<Eigen::Index>(c)) / mass(static_cast<Eigen::Index>(c)),
                 var_floor);
    components[c].sigma = std::sqrt(variance);
  }

  TwoLayerMixture model;
  model.scenarios.resize(k2);
  for (std::size_t j = 0; j < k2; ++j) {
    auto& s = model.scenarios[j];
    s.inner_weights.resize(k1);
    s.gaussians.resize(k1);
    double scenario_mass = 0.0;
    for (std::size_t i = 0; i < k1; ++i) {
      scenario_mass += mass(static_cast<Eigen::Index>(j * k1 + i));
    }
    for (std::size_t i = 0; i < k1; ++i) {
      s.gaussians[i] = components[j * k1 + i];
      s.inner_weights[i] = scenario_mass > 0.0
                               ? mass(static_cast<Eigen::Index>(j * k1 + i)) / scenario_mass
                               : 1.0 / static_cast<double>(k1);
    }
  }

  model.segment_weights.resize(static_cast<Eigen::Index>(n_seg), static_cast<Eigen::Index>(k2));
  for (std::size_t t = 0; t < n_seg; ++t) {
    double seg_total = 0.0;
    std::vector<double> scenario_mass(k2, 0.0);
    for (std::size_t j = 0; j < k2; ++j) {
      for (std::size_t i = 0; i < k1; ++i) {
        scenario_mass[j] +=
            seg_mass(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j * k1 + i));
      }
      seg_total += scenario_mass[j];
    }
    for (std::size_t j = 0; j < k2; ++j) {
      model.segment_weights(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          seg_total > 0.0 ? scenario_mass[j] / seg_total : 1.0 / static_cast<double>(k2);
    }
  }
  model.segment_lengths = seg.segment_lengths();
  return model;
}

}  // namespace

void FitConfig::validate() const {
  if (k2 < 1 || k1 < 1 || max_iters < 1 || restarts < 1) {
    throw std::invalid_argument("fit config: k2, k1, max_iters and restarts must be >= 1");
  }
  if (!(rel_tol > 0.0) || !(variance_floor_factor > 0.0)) {
    throw std::invalid_argument("fit config: rel_tol and variance_floor_factor must be > 0");
  }
}

TwoLayerMixture init_model(const ReturnSeries& r, const Segmentation& seg, const FitConfig& cfg,
                           std::size_t restart) {
  cfg.validate();
  seg.validate(1);
  if (seg.series_length != r.size()) {
    throw std::invalid_argument("segmentation does not match the series length");
  }
  const std::size_t n = r.size();
  const std::size_t k = cfg.k2 * cfg.k1;
  if (n < k) {
    throw std::invalid_argument("fewer observations than k2*k1 components");
  }
  const double var_r = population_variance(r.values);
  if (!(var_r > 0.0)) {
    throw std::invalid_argument("degenerate series: zero variance");
  }
  const double sigma_floor = std::sqrt(cfg.variance_floor_factor * var_r);

  std::mt19937_64 rng(cfg.seed + restart);
  std::vector<double> centers;
  if (k == 1) {
    centers.push_back(std::accumulate(r.values.begin(), r.values.end(), 0.0) /
                      static_cast<double>(n));
  } else {
    // k-means++ seeding over the pooled returns.
    centers.push_back(r.values[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = r.values[i] - centers[0];
      d2[i] = d * d;
    }
    while (centers.size() < k) {
      const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
      std::size_t pick = 0;
      if (total > 0.0) {
        const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (target < acc) {
            pick = i;
            break;
          }
        }
      } else {
        pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      }
      centers.push_back(r.values[pick]);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = r.values[i] - centers.back();
        d2[i] = std::min(d2[i], d * d);
      }
    }
    std::sort(centers.begin(), centers.end());
  }

  // Within-cluster spread around each center.
  std::vector<double> sq_sum(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = std::abs(r.values[i] - centers[c]);
      if (d < best) {
        best = d;
        nearest = c;
      }
    }
    sq_sum[nearest] += (r.values[i] - centers[nearest]) * (r.values[i] - centers[nearest]);
    count[nearest] += 1;
  }

  TwoLayerMixture model;
  model.scenarios.resize(cfg.k2);
  for (std::size_t j = 0; j < cfg.k2; ++j) {
    auto& s = model.scenarios[j];
    s.inner_weights.assign(cfg.k1, 1.0 / static_cast<double>(cfg.k1));
    s.gaussians.resize(cfg.k1);
    for (std::size_t i = 0; i < cfg.k1; ++i) {
      const std::size_t c = j * cfg.k1 + i;
      s.gaussians[i].mu = centers[c];
      const double sigma =
          count[c] >= 2 ? std::sqrt(sq_sum[c] / static_cast<double>(count[c])) : std::sqrt(var_r);
      s.gaussians[i].sigma = std::max(sigma, sigma_floor);
    }
  }
  model.segment_weights = Eigen::MatrixXd::Constant(
      static_cast<Eigen::Index>(seg.segment_count()), static_cast<Eigen::Index>(cfg.k2),
      1.0 / static_cast<double>(cfg.k2));
  model.segment_lengths = seg.segment_lengths();
  canonicalize(model);
  return model;
}

Responsibilities e_step(const ReturnSeries& r, const Segmentation& seg, const TwoLayerMixture& m) {
  check_consistent(r, seg, m);
  const std::size_t k1 = equal_inner_count(m);
  const std::size_t k2 = m.scenario_count();
  const auto cols = static_cast<Eigen::Index>(k2 * k1);
  const std::size_t n = r.size();

  const LogWeights lw = log_weight_table(m, k1);

  Responsibilities resp;
  resp.eta.resize(static_cast<Eigen::Index>(n), cols);
  resp.segment_of = seg.segment_of_each();

  std::vector<double> logs(k2 * k1);
  for (std::size_t s = 0; s < n; ++s) {
    const auto t = static_cast<Eigen::Index>(resp.segment_of[s]);
    double max_log = kNegInf;
    for (std::size_t j = 0; j < k2; ++j) {
      for (std::size_t i = 0; i < k1; ++i) {
        const std::size_t c = j * k1 + i;
        const double lwc = lw.table(t, static_cast<Eigen::Index>(c));
        logs[c] = std::isfinite(lwc)
                      ? lwc + normal_log_pdf(r.values[s], m.scenarios[j].gaussians[i])
                      : kNegInf;
        max_log = std::max(max_log, logs[c]);
      }
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < k2 * k1; ++c) {
      denom += std::exp(logs[c] - max_log);
    }
    const double log_denom = max_log + std::log(denom);
    for (std::size_t c = 0; c < k2 * k1; ++c) {
      resp.eta(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(c)) =
          std::exp(logs[c] - log_denom);
    }
  }
  return resp;
}

TwoLayerMixture m_step(const ReturnSeries& r, const Segmentation& seg, const Responsibilities& resp,
                       const FitConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  return m_step_impl(r, seg, resp, cfg, rng);
}

double log_likelihood(const ReturnSeries& r, const Segmentation& seg, const TwoLayerMixture& m) {
  check_consistent(r, seg, m);
  const std::size_t k1 = equal_inner_count(m);
  const std::size_t k2 = m.scenario_count();
  const LogWeights lw = log_weight_table(m, k1);
  const auto owner = seg.segment_of_each();

  double total = 0.0;
  std::vector<double> logs(k2 * k1);
  for (std::size_t s = 0; s < r.size(); ++s) {
    const auto t = static_cast<Eigen::Index>(owner[s]);
    double max_log = kNegInf;
    for (std::size_t j = 0; j < k2; ++j) {
      for (std::size_t i = 0; i < k1; ++i) {
        const std::size_t c = j * k1 + i;
        const double lwc = lw.table(t, static_cast<Eigen::Index>(c));
        logs[c] = std::isfinite(lwc)
                      ? lwc + normal_log_pdf(r.values[s], m.scenarios[j].gaussians[i])
                      : kNegInf;
        max_log = std::max(max_log, logs[c]);
      }
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < k2 * k1; ++c) {
      acc += std::exp(logs[c] - max_log);
    }
    total += max_log + std::log(acc);
  }
  return total;
}

FitResult run_em(const ReturnSeries& r, const Segmentation& seg, TwoLayerMixture start,
                 const FitConfig& cfg, std::uint64_t rescue_seed, EmTrace* trace) {
  cfg.validate();
  check_consistent(r, seg, start);

  std::mt19937_64 rescue_rng(rescue_seed);
  FitResult result;
  result.model = std::move(start);
  double ll = log_likelihood(r, seg, result.model);
  if (trace != nullptr) trace->log_likelihoods.push_back(ll);

  for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
    const Responsibilities resp = e_step(r, seg, result.model);
    result.model = m_step_impl(r, seg, resp, cfg, rescue_rng);
    const double next_ll = log_likelihood(r, seg, result.model);
    if (trace != nullptr) trace->log_likelihoods.push_back(next_ll);
    result.iterations = iter;
    if (std::abs(next_ll - ll) / (std::abs(next_ll) + 1.0) < cfg.rel_tol) {
      ll = next_ll;
      result.converged = true;
      break;
    }
    ll = next_ll;
  }
  result.log_likelihood = ll;
  return result;
}

FitResult fit(const ReturnSeries& r, const Segmentation& seg, const FitConfig& cfg) {
  cfg.validate();
  seg.validate(1);
  if (r.size() < cfg.k2 * cfg.k1) {
    throw std::invalid_argument("fewer observations than k2*k1 components");
  }

  FitResult best;
  bool have_best = false;
  for (std::size_t restart = 0; restart < cfg.restarts; ++restart) {
    TwoLayerMixture start = init_model(r, seg, cfg, restart);
    const std::uint64_t rescue_seed = (cfg.seed + restart) ^ 0x9e3779b97f4a7c15ULL;
    FitResult candidate = run_em(r, seg, std::move(start), cfg, rescue_seed, nullptr);
    candidate.restart_index = restart;
    if (!have_best || candidate.log_likelihood > best.log_likelihood) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  canonicalize(best.model);
  return best;
}

}  // namespace wvar
