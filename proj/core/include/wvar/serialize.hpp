#pragma once

#include <string>

#include "wvar/em.hpp"
#include "wvar/mixture.hpp"
#include "wvar/risk.hpp"

namespace wvar {

/// JSON document with fields k2, k1, scenarios (inner_weights, mu, sigma),
/// segment_weights, segment_lengths. Finite doubles round-trip bit-exactly.
/// Requires equal inner component counts across scenarios (the schema's k1
/// is a scalar).
std::string model_to_json(const TwoLayerMixture& m);
TwoLayerMixture model_from_json(const std::string& text);

/// Model JSON plus log_likelihood, iterations, converged, restart_index.
std::string fit_result_to_json(const FitResult& fr);
FitResult fit_result_from_json(const std::string& text);

std::string risk_report_to_json(const RiskReport& rr);

const char* risk_basis_name(RiskBasis basis);

}  // namespace wvar
