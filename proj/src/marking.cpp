#include "fluxrec/marking.hpp"

#include <algorithm>
#include <numeric>

namespace fluxrec {
namespace {

void check_theta(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("marking: theta must lie in [0,1]");
}

void check_nonempty(std::span<const double> eta) {
  if (eta.empty()) throw std::invalid_argument("marking: no elements");
}

double global(std::span<const double> eta) {
  double s = 0.0;
  for (double e : eta) s += e * e;
  return std::sqrt(s);
}

bool all_zero(std::span<const double> eta) {
  return std::all_of(eta.begin(), eta.end(), [](double e) { return e == 0.0; });
}

MarkingDecision threshold_marking(std::span<const double> eta, double threshold, MarkingStrategy strategy) {
  MarkingDecision d;
  d.strategy = strategy;
  d.threshold_used = threshold;
  if (all_zero(eta)) return d;
  for (std::size_t t = 0; t < eta.size(); ++t) {
    if (eta[t] >= threshold) d.marked.push_back(static_cast<TriangleId>(t));
  }
  return d;
}

}  // namespace

std::string to_string(MarkingStrategy strategy) {
  switch (strategy) {
    case MarkingStrategy::Maximum:
      return "maximum";
    case MarkingStrategy::Equidistribution:
      return "equidistribution";
    case MarkingStrategy::ModifiedEquidistribution:
      return "modified_equidistribution";
    case MarkingStrategy::Doerfler:
      return "doerfler";
  }
  return "?";
}

MarkingStrategy parse_marking_strategy(const std::string& name) {
  for (auto s : {MarkingStrategy::Maximum, MarkingStrategy::Equidistribution, MarkingStrategy::ModifiedEquidistribution,
                 MarkingStrategy::Doerfler}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown marking strategy '" + name +
                              "' (valid: maximum, equidistribution, modified_equidistribution, doerfler)");
}

std::vector<double> element_eta(const ElementIndicators& indicators) {
  std::vector<double> eta(indicators.size());
  for (std::size_t t = 0; t < eta.size(); ++t) eta[t] = std::sqrt(indicators.eta_sq[t]);
  return eta;
}

MarkingDecision mark_maximum(std::span<const double> eta, double theta) {
  check_theta(theta);
  check_nonempty(eta);
  const double max = *std::max_element(eta.begin(), eta.end());
  return threshold_marking(eta, theta * max, MarkingStrategy::Maximum);
}

MarkingDecision mark_equidistribution(std::span<const double> eta, double theta, double tol) {
  check_theta(theta);
  check_nonempty(eta);
  if (!(tol > 0.0)) throw std::invalid_argument("marking: TOL must be positive");
  const double threshold = theta * tol / std::sqrt(static_cast<double>(eta.size()));
  if (global(eta) <= tol) {
    MarkingDecision d;
    d.strategy = MarkingStrategy::Equidistribution;
    d.threshold_used = threshold;
    d.terminate = true;
    return d;
  }
  return threshold_marking(eta, threshold, MarkingStrategy::Equidistribution);
}

MarkingDecision mark_modified_equidistribution(std::span<const double> eta, double theta) {
  check_theta(theta);
  check_nonempty(eta);
  const double threshold = theta * global(eta) / std::sqrt(static_cast<double>(eta.size()));
  return threshold_marking(eta, threshold, MarkingStrategy::ModifiedEquidistribution);
}

MarkingDecision mark_doerfler(std::span<const double> eta, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw std::invalid_argument("marking: Doerfler theta must lie in (0,1]");
  check_nonempty(eta);
  MarkingDecision d;
  d.strategy = MarkingStrategy::Doerfler;
  if (all_zero(eta)) return d;

  std::vector<TriangleId> order(eta.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](TriangleId a, TriangleId b) { return eta[static_cast<std::size_t>(a)] > eta[static_cast<std::size_t>(b)]; });

  // Squared sums accumulated in sorted order so that theta = 1 reaches the
  // full sum exactly once the last nonzero value is included.
  double total_sq = 0.0;
  for (TriangleId t : order) total_sq += eta[static_cast<std::size_t>(t)] * eta[static_cast<std::size_t>(t)];
  const double target_sq = theta * theta * total_sq;

  double acc = 0.0;
  std::size_t count = 0;
  while (count < order.size() && acc < target_sq) {
    const double e = eta[static_cast<std::size_t>(order[count])];
    acc += e * e;
    ++count;
  }
  if (acc < target_sq) count = order.size();  // rounding on the full sum
  const double last = eta[static_cast<std::size_t>(order[count - 1])];
  while (count < order.size() && eta[static_cast<std::size_t>(order[count])] == last) ++count;

  d.threshold_used = last;
  d.marked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
  std::sort(d.marked.begin(), d.marked.end());
  return d;
}

MarkingDecision mark(MarkingStrategy strategy, std::span<const double> eta, double theta, double tol) {
  switch (strategy) {
    case MarkingStrategy::Maximum:
      return mark_maximum(eta, theta);
    case MarkingStrategy::Equidistribution:
      return mark_equidistribution(eta, theta, tol);
    case MarkingStrategy::ModifiedEquidistribution:
      return mark_modified_equidistribution(eta, theta);
    case MarkingStrategy::Doerfler:
      return mark_doerfler(eta, theta);
  }
  throw std::logic_error("unhandled marking strategy");
}

}  // namespace fluxrec
