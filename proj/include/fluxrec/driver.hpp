#pragma once

// SOLVE -> ESTIMATE -> MARK -> REFINE loop and its uniform-refinement baseline.

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fluxrec/estimator.hpp"
#include "fluxrec/marking.hpp"
#include "fluxrec/mesh.hpp"
#include "fluxrec/problems.hpp"
#include "fluxrec/solver.hpp"

namespace fluxrec {

/// Initial mesh plus data. `measurement` (optional) enables the guard that
/// rejects an inversion mesh identical to the data-generation mesh.
struct InverseProblem {
  MeshPtr initial_mesh;
  ProblemData data;
  MeasurementPtr measurement;
};

/// Builds the initial mesh, the synthetic measurement and the data of a benchmark.
InverseProblem make_inverse_problem(const ProblemSpec& spec, int measurement_levels);

struct LoopConfig {
  MarkingStrategy strategy = MarkingStrategy::Maximum;
  double theta = 0.5;
  double tol = 1e-3;
  int max_iters = 20;
  std::size_t max_triangles = 50000;
  SolverSettings solver;
  bool record_errors = false;
  int reference_levels = 3;  // uniform bisection sweeps of the final mesh
  bool warm_start = true;

  void validate() const;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ErrorRecord {
  double q = kNaN;  // ||q_ref - q_k||_{0,Gamma_i}
  double u = kNaN;  // ||u_ref - u_k||_1
  double p = kNaN;  // ||p_ref - p_k||_1
};

struct IterationRecord {
  int iter = 0;
  std::size_t n_vertices = 0;
  std::size_t n_triangles = 0;
  std::size_t n_flux_dofs = 0;
  double eta = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double osc = 0.0;
  double objective = 0.0;
  int cg_iterations = 0;
  std::size_t n_marked = 0;
  ErrorRecord errors;
};

enum class StopReason { Terminated, Tolerance, MaxIterations, MaxTriangles, ZeroEstimator };

std::string to_string(StopReason reason);

struct AdaptiveHistory {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::MaxIterations;
  MeshPtr final_mesh;
  OptimalTriplet final_triplet;
};

/// Snapshot handed to observers after MARK in every iteration.
struct IterationView {
  int iter;
  const MeshPtr& mesh;
  const OptimalTriplet& triplet;
  const ElementIndicators& indicators;
  const MarkingDecision& decision;
};

using IterationObserver = std::function<void(const IterationView&)>;

/// Solver failures surface as this error with the iterations completed so far.
class AdaptiveRunError : public std::runtime_error {
 public:
  AdaptiveRunError(const std::string& what, AdaptiveHistory partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const AdaptiveHistory& partial_history() const { return partial_; }

 private:
  AdaptiveHistory partial_;
};

AdaptiveHistory run_adaptive(const InverseProblem& problem, const LoopConfig& config,
                             const IterationObserver& observer = {});
/// Marks every triangle in every iteration; otherwise identical to run_adaptive.
AdaptiveHistory run_uniform(const InverseProblem& problem, const LoopConfig& config,
                            const IterationObserver& observer = {});

/// Closed-form comparator. Missing members leave the matching error as NaN.
struct AnalyticReference {
  ScalarField u;
  VectorField grad_u;
  ScalarField p;
  VectorField grad_p;
  ScalarField q;
};

/// Triplet on `mesh` refined uniformly `levels` times, solved with the same data.
OptimalTriplet compute_reference(const InverseProblem& problem, const MeshPtr& mesh, int levels,
                                 const SolverSettings& settings);

/// Errors against a reference triplet on a refinement of the triplet's mesh.
ErrorRecord true_errors(const OptimalTriplet& triplet, const OptimalTriplet* reference);
/// Errors against closed-form fields by quadrature on the triplet's mesh.
ErrorRecord true_errors(const OptimalTriplet& triplet, const AnalyticReference& reference);

}  // namespace fluxrec
