#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fluxrec/marking.hpp"

using namespace fluxrec;

namespace {

const std::vector<double> kEta{1, 2, 3, 4};

std::vector<TriangleId> ids(std::initializer_list<TriangleId> v) { return v; }

double max_over(std::span<const double> eta, const std::vector<TriangleId>& set, bool inside) {
  double m = 0.0;
  for (std::size_t t = 0; t < eta.size(); ++t) {
    const bool in = std::binary_search(set.begin(), set.end(), static_cast<TriangleId>(t));
    if (in == inside) m = std::max(m, eta[t]);
  }
  return m;
}

double min_inside(std::span<const double> eta, const std::vector<TriangleId>& set) {
  double m = std::numeric_limits<double>::infinity();
  for (TriangleId t : set) m = std::min(m, eta[static_cast<std::size_t>(t)]);
  return m;
}

double norm_over(std::span<const double> eta, const std::vector<TriangleId>& set) {
  double s = 0.0;
  for (TriangleId t : set) s += eta[static_cast<std::size_t>(t)] * eta[static_cast<std::size_t>(t)];
  return std::sqrt(s);
}

std::vector<double> random_eta(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 4);
  std::vector<double> eta(n);
  for (double& e : eta) e = coin(rng) == 0 ? 0.25 : dist(rng);  // inject ties
  return eta;
}

}  // namespace

TEST_CASE("strategy names") {
  for (auto s : {MarkingStrategy::Maximum, MarkingStrategy::Equidistribution, MarkingStrategy::ModifiedEquidistribution,
                 MarkingStrategy::Doerfler}) {
    CHECK(parse_marking_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_WITH(parse_marking_strategy("bulk"), doctest::Contains("doerfler"));
}

TEST_CASE("maximum strategy") {
  CHECK(mark_maximum(kEta, 0.5).marked == ids({1, 2, 3}));
  CHECK(mark_maximum(kEta, 0.0).marked == ids({0, 1, 2, 3}));
  const std::vector<double> ties{4, 1, 4, 2};
  CHECK(mark_maximum(ties, 1.0).marked == ids({0, 2}));
  CHECK_THROWS_AS(mark_maximum(kEta, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(mark_maximum(kEta, -0.1), std::invalid_argument);
}

TEST_CASE("equidistribution strategy") {
  const MarkingDecision stop = mark_equidistribution(kEta, 0.5, 10.0);
  CHECK(stop.terminate);
  CHECK(stop.marked.empty());
  CHECK(mark_equidistribution(kEta, 1.0, 2.0).marked == ids({0, 1, 2, 3}));
  const MarkingDecision d = mark_equidistribution(kEta, 1.0, 4.0);
  CHECK_FALSE(d.terminate);
  CHECK(d.threshold_used == 2.0);
  CHECK(d.marked == ids({1, 2, 3}));
  CHECK_THROWS_AS(mark_equidistribution(kEta, 0.5, 0.0), std::invalid_argument);
}

TEST_CASE("modified equidistribution strategy") {
  const MarkingDecision d = mark_modified_equidistribution(kEta, 0.5);
  CHECK(d.threshold_used == doctest::Approx(0.5 * std::sqrt(30.0) / 2.0));
  CHECK(d.marked == ids({1, 2, 3}));
  CHECK(mark_modified_equidistribution(kEta, 0.0).marked == ids({0, 1, 2, 3}));
  const std::vector<double> flat(7, 0.3);
  for (double theta : {0.0, 0.3, 0.99, 1.0}) CHECK(mark_modified_equidistribution(flat, theta).marked.size() == 7);
}

TEST_CASE("Doerfler strategy") {
  const std::vector<double> eta{4, 3, 2, 1};
  CHECK(mark_doerfler(eta, 0.5).marked == ids({0}));
  CHECK(mark_doerfler(eta, 0.9).marked == ids({0, 1}));
  CHECK(mark_doerfler(eta, 1.0).marked == ids({0, 1, 2, 3}));
  const std::vector<double> trailing_zero{0, 2, 0, 1};
  CHECK(mark_doerfler(trailing_zero, 1.0).marked == ids({1, 3}));
  const std::vector<double> ties{3, 3, 1, 3};
  CHECK(mark_doerfler(ties, 0.1).marked == ids({0, 1, 3}));
  CHECK_THROWS_AS(mark_doerfler(eta, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(mark_doerfler(eta, 1.1), std::invalid_argument);
}

TEST_CASE("all-zero indicators mark nothing") {
  const std::vector<double> zero(5, 0.0);
  for (auto s : {MarkingStrategy::Maximum, MarkingStrategy::ModifiedEquidistribution, MarkingStrategy::Doerfler}) {
    CHECK(mark(s, zero, 0.5, 1.0).marked.empty());
  }
  CHECK(mark(MarkingStrategy::Equidistribution, zero, 0.5, 1.0).terminate);
}

TEST_CASE("marking condition, Doerfler conditions and monotonicity on random indicators") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const auto eta = random_eta(rng, 1 + static_cast<std::size_t>(trial % 40));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double theta = std::max(1e-3, unit(rng));
    const double total = norm_over(eta, [&] {
      std::vector<TriangleId> all(eta.size());
      for (std::size_t t = 0; t < eta.size(); ++t) all[t] = static_cast<TriangleId>(t);
      return all;
    }());
    const double tol = 0.5 * total;
    for (auto s : {MarkingStrategy::Maximum, MarkingStrategy::Equidistribution, MarkingStrategy::ModifiedEquidistribution,
                   MarkingStrategy::Doerfler}) {
      const MarkingDecision d = mark(s, eta, theta, tol);
      CHECK(std::is_sorted(d.marked.begin(), d.marked.end()));
      if (d.terminate) continue;
      REQUIRE_FALSE(d.marked.empty());
      CHECK(max_over(eta, d.marked, false) <= max_over(eta, d.marked, true));
      CHECK(mark(s, eta, theta, tol).marked == d.marked);
    }
    const MarkingDecision dd = mark_doerfler(eta, theta);
    CHECK(norm_over(eta, dd.marked) >= theta * total * (1 - 1e-15));
    CHECK(min_inside(eta, dd.marked) >= max_over(eta, dd.marked, false));

    const double theta2 = std::min(1.0, theta + 0.2);
    for (auto s : {MarkingStrategy::Maximum, MarkingStrategy::Equidistribution, MarkingStrategy::ModifiedEquidistribution}) {
      const auto a = mark(s, eta, theta, tol).marked;
      const auto b = mark(s, eta, theta2, tol).marked;
      CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
    }
  }
}
