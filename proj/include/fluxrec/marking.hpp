#pragma once

#include <span>
#include <string>
#include <vector>

#include "fluxrec/common.hpp"
#include "fluxrec/estimator.hpp"

namespace fluxrec {

enum class MarkingStrategy { Maximum, Equidistribution, ModifiedEquidistribution, Doerfler };

std::string to_string(MarkingStrategy strategy);
/// Accepts maximum, equidistribution, modified_equidistribution, doerfler.
MarkingStrategy parse_marking_strategy(const std::string& name);

struct MarkingDecision {
  std::vector<TriangleId> marked;  // ascending ids
  double threshold_used = 0.0;
  MarkingStrategy strategy = MarkingStrategy::Maximum;
  bool terminate = false;
};

/// Indicator values eta_T = sqrt(eta_sq).
std::vector<double> element_eta(const ElementIndicators& indicators);

/// eta_T >= theta * max eta.
MarkingDecision mark_maximum(std::span<const double> eta, double theta);
/// Terminates when the global estimator is <= tol, else eta_T >= theta tol / sqrt(N).
MarkingDecision mark_equidistribution(std::span<const double> eta, double theta, double tol);
/// eta_T >= theta * eta_global / sqrt(N).
MarkingDecision mark_modified_equidistribution(std::span<const double> eta, double theta);
/// Shortest descending prefix with eta(prefix) >= theta * eta_global, extended
/// over ties with its last value.
MarkingDecision mark_doerfler(std::span<const double> eta, double theta);

MarkingDecision mark(MarkingStrategy strategy, std::span<const double> eta, double theta, double tol);

}  // namespace fluxrec
