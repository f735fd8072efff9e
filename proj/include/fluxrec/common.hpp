#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace fluxrec {

using VertexId = std::int32_t;
using TriangleId = std::int32_t;
using FaceId = std::int32_t;

inline constexpr std::int32_t kNone = -1;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline Point midpoint(Point a, Point b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

/// A scalar datum evaluable at any point of the closed domain.
using ScalarField = std::function<double(Point)>;
/// Gradient of a scalar field, used for manufactured references.
using VectorField = std::function<Point(Point)>;

/// Material and regularization constants of the inverse problem.
struct CoefficientSet {
  double alpha = 1.0;  // diffusivity
  double gamma = 1.0;  // heat transfer on the accessible boundary
  double beta = 1e-3;  // Tikhonov weight

  void validate() const {
    if (!(alpha > 0.0) || !(gamma > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(gamma) ||
        !std::isfinite(beta)) {
      throw std::invalid_argument("coefficients alpha, gamma, beta must be finite and strictly positive");
    }
  }
};

/// Thrown when an iterative solver exhausts its budget.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what + " (iterations=" + std::to_string(iterations) +
                           ", relative residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

}  // namespace fluxrec
