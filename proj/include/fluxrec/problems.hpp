#pragma once

// Built-in benchmark problems and synthetic boundary measurements.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fluxrec/common.hpp"
#include "fluxrec/mesh.hpp"
#include "fluxrec/solver.hpp"

namespace fluxrec {

struct ProblemSpec {
  std::string name;
  DomainSpec domain;
  CoefficientSet coeffs;
  ScalarField f;
  ScalarField u_a;
  ScalarField q_true;  // evaluated on Gamma_i
  double noise = 0.0;  // relative level delta in [0,1]
  std::uint64_t seed = 0;

  void validate() const;
};

/// square_smooth, square_jump or lshape_spike.
ProblemSpec builtin_problem(const std::string& name);
std::vector<std::string> builtin_problem_names();

struct MeasurementSample {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

/// Temperature samples along Gamma_a, piecewise linear in arc length between
/// consecutive samples of one chain. Disjoint parts of Gamma_a form separate
/// chains.
class Measurement {
 public:
  Measurement() = default;
  explicit Measurement(std::vector<std::vector<MeasurementSample>> chains);

  const std::vector<std::vector<MeasurementSample>>& chains() const { return chains_; }
  std::size_t sample_count() const;

  /// Value at a point of Gamma_a; throws std::domain_error off the sampled polyline.
  double evaluate(Point p) const;

  // Generation mesh of synthetic data, used by the inverse-crime guard.
  std::size_t generation_triangles = 0;
  int generation_levels = -1;

 private:
  struct Segment {
    Point a;
    Point b;
    double va;
    double vb;
  };
  std::vector<std::vector<MeasurementSample>> chains_;
  std::vector<Segment> segments_;
  Point lo_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<std::int32_t>> buckets_;

  void index_segments();
};

using MeasurementPtr = std::shared_ptr<const Measurement>;

/// Ordered chains of Gamma_a vertex ids, each starting at its smaller-id end.
std::vector<std::vector<VertexId>> boundary_chains(const Mesh& mesh, BoundaryTag tag);

/// Forward solve with q = q_true on the initial mesh bisected uniformly
/// `extra_levels` times, sampled at the Gamma_a vertices with multiplicative
/// noise value * (1 + delta xi), xi uniform in [-1,1].
Measurement generate_measurement(const ProblemSpec& problem, int extra_levels,
                                 std::optional<double> override_noise = std::nullopt);

/// Coefficients, data and the measurement wrapped as the inverse-problem data.
ProblemData make_problem_data(const ProblemSpec& problem, MeasurementPtr measurement);

}  // namespace fluxrec
