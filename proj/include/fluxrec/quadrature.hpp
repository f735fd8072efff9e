#pragma once

#include <array>
#include <span>

namespace fluxrec::quadrature {

/// Point in barycentric coordinates with a weight that sums to one over the rule.
struct TrianglePoint {
  std::array<double, 3> bary;
  double weight;
};

/// Point on [0,1] with a weight summing to one.
struct LinePoint {
  double t;
  double weight;
};

/// Edge-midpoint rule, exact for quadratics.
inline constexpr std::array<TrianglePoint, 3> kTriangleMidpoint{{
    {{0.5, 0.5, 0.0}, 1.0 / 3.0},
    {{0.0, 0.5, 0.5}, 1.0 / 3.0},
    {{0.5, 0.0, 0.5}, 1.0 / 3.0},
}};

/// Six-point degree-4 rule (Dunavant).
inline constexpr std::array<TrianglePoint, 6> kTriangleDegree4{{
    {{0.445948490915965, 0.445948490915965, 0.108103018168070}, 0.223381589678011},
    {{0.445948490915965, 0.108103018168070, 0.445948490915965}, 0.223381589678011},
    {{0.108103018168070, 0.445948490915965, 0.445948490915965}, 0.223381589678011},
    {{0.091576213509771, 0.091576213509771, 0.816847572980459}, 0.109951743655322},
    {{0.091576213509771, 0.816847572980459, 0.091576213509771}, 0.109951743655322},
    {{0.816847572980459, 0.091576213509771, 0.091576213509771}, 0.109951743655322},
}};

inline constexpr double kGauss2Offset = 0.28867513459481288225;  // 1/(2 sqrt 3)
inline constexpr double kGauss3Offset = 0.38729833462074168852;  // sqrt(3/5)/2

inline constexpr std::array<LinePoint, 2> kGauss2{{{0.5 - kGauss2Offset, 0.5}, {0.5 + kGauss2Offset, 0.5}}};
inline constexpr std::array<LinePoint, 3> kGauss3{
    {{0.5 - kGauss3Offset, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + kGauss3Offset, 5.0 / 18.0}}};

}  // namespace fluxrec::quadrature
