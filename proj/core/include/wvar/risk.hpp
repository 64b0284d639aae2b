#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "wvar/mixture.hpp"
#include "wvar/series.hpp"

namespace wvar {

enum class RiskBasis { fitted_mixture, empirical };

struct RiskQuery {
  double alpha = 0.95;                          // confidence level, (0.5, 1)
  std::optional<std::size_t> segment;           // nullopt = pooled
  RiskBasis basis = RiskBasis::fitted_mixture;

  void validate() const;
};

/// Loss magnitudes in log-return units; positive when the relevant return
/// quantile is negative. bvar <= var <= wvar.
struct RiskReport {
  double alpha = 0.95;
  double var = 0.0;
  double wvar = 0.0;
  double bvar = 0.0;
  std::vector<double> per_scenario_var;
  std::size_t worst_scenario = 0;
  std::size_t best_scenario = 0;
  RiskBasis basis = RiskBasis::fitted_mixture;
};

/// Inverts a continuous strictly increasing CDF: returns x with
/// |cdf(x) - p| <= 1e-10 by bracket expansion then bisection (<= 200
/// iterations). Monotone in p.
double mixture_quantile(const std::function<double(double)>& cdf, double p, double bracket_lo,
                        double bracket_hi);

/// VaR_alpha = -Q(1 - alpha) of the return distribution.
double value_at_risk(const ScenarioComponent& s, double alpha);
double value_at_risk(const FlattenedMixture& f, double alpha);
double value_at_risk(const GaussianComponent& g, double alpha);

/// Per-scenario VaR plus the max (worst) and min (best) over the scenario
/// set; ties broken toward the lower scenario index. The var field is left
/// at 0 for the caller to fill (pooled or empirical).
RiskReport worst_best_var(const TwoLayerMixture& m, double alpha);

/// VaR of the flattened mixture under time-averaged outer weights
/// beta_bar_j = sum_t (n_t / n) beta_j^(t).
double pooled_var(const TwoLayerMixture& m, double alpha);

/// Negated empirical (1-alpha)-quantile with linear interpolation between
/// order statistics. Requires n >= 20.
double empirical_var(const ReturnSeries& r, double alpha);

/// WVaR over the scenario mixtures vs. WVaR treating every individual
/// Gaussian as its own candidate distribution. The flattened value always
/// dominates; both are reported for diagnostics. The candidate Gaussian set
/// is the full scenario-by-inner grid, independent of t.
struct OverestimationCheck {
  double two_layer_wvar = 0.0;
  double flattened_wvar = 0.0;
};
OverestimationCheck one_layer_overestimation_check(const TwoLayerMixture& m, std::size_t t,
                                                   double alpha);

}  // namespace wvar
