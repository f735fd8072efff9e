#pragma once

// Discrete optimality system for the Tikhonov-regularized flux reconstruction:
//
//   a(u, phi) = (f, phi) + (gamma u_a, phi)_{Gamma_a} - (q, phi)_{Gamma_i}
//   a(p, v)   = (u - z, v)_{Gamma_a}
//   (beta q - p, w)_{Gamma_i} = 0
//
// The flux is eliminated into the reduced normal operator
// H = beta M_i + B^T A^{-1} M_a A^{-1} B, which is solved by conjugate
// gradients preconditioned with the trace mass matrix M_i.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fluxrec/common.hpp"
#include "fluxrec/fem.hpp"
#include "fluxrec/mesh.hpp"
#include "fluxrec/sparse.hpp"

namespace fluxrec {

enum class InnerSolver { Direct, Cg };

struct SolverSettings {
  double cg_tol = 1e-10;
  int cg_max_iters = 1000;
  InnerSolver inner_solver = InnerSolver::Direct;

  void validate() const;
};

/// Data of the inverse problem: coefficients, source, ambient temperature and
/// the measurement z on Gamma_a.
struct ProblemData {
  CoefficientSet coeffs;
  ScalarField f;
  ScalarField u_a;
  ScalarField z;
};

struct OptimalTriplet {
  FeFunction u;  // state
  FeFunction p;  // costate
  TraceFunction q;  // flux on Gamma_i
};

struct SolveReport {
  int outer_iterations = 0;
  double relative_residual = 0.0;
};

enum class ResidualKind { State, Costate };

/// Symmetric positive definite solver for A = alpha K + gamma M_a.
class StateSolver {
 public:
  StateSolver(const SparseOperator& a, const SolverSettings& settings);
  ~StateSolver();
  StateSolver(StateSolver&&) noexcept;
  StateSolver& operator=(StateSolver&&) noexcept;

  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Jacobi-preconditioned CG on a symmetric positive definite operator.
/// Returns the iteration count; throws SolverError on non-convergence.
int conjugate_gradient(const SparseOperator& a, std::span<const double> rhs, std::span<double> x, double rel_tol,
                       int max_iters);

/// Everything needed to solve the optimality system on one mesh.
class DiscreteSystem {
 public:
  DiscreteSystem(MeshPtr mesh, ProblemData data, SolverSettings settings);
  ~DiscreteSystem();
  DiscreteSystem(DiscreteSystem&&) noexcept;
  DiscreteSystem& operator=(DiscreteSystem&&) noexcept;

  const MeshPtr& mesh() const { return mesh_; }
  const TraceSpacePtr& trace_space() const { return trace_space_; }
  const ProblemData& data() const { return data_; }
  const SolverSettings& settings() const { return settings_; }

  const SparseOperator& bilinear() const { return a_; }
  const std::vector<double>& load() const { return load_; }
  const TraceOperators& trace_operators() const { return trace_ops_; }
  /// (z, phi_i)_{Gamma_a} by three-point Gauss.
  const std::vector<double>& measurement_load() const { return z_load_; }

  /// u(q): A u = F - B q.
  FeFunction solve_state(const TraceFunction& q) const;
  /// p(u): A p = M_a u - b_z.
  FeFunction solve_costate(const FeFunction& u) const;
  /// g with M_i g = beta M_i q - B^T p(u(q)).
  TraceFunction reduced_gradient(const TraceFunction& q) const;
  /// Trace-mass solve M_i^{-1} r.
  std::vector<double> solve_trace_mass(std::span<const double> r) const;

  /// J(q) = 1/2 ||u(q) - z||^2_{Gamma_a} + beta/2 ||q||^2_{Gamma_i}.
  double objective(const TraceFunction& q) const;
  double objective(const FeFunction& u, const TraceFunction& q) const;

  /// H w for the reduced normal operator.
  std::vector<double> apply_reduced_hessian(std::span<const double> w) const;

  /// Reduced CG from `warm_start` (zero when absent).
  OptimalTriplet solve_optimality(const std::optional<TraceFunction>& warm_start = std::nullopt,
                                  SolveReport* report = nullptr) const;

 private:
  MeshPtr mesh_;
  ProblemData data_;
  SolverSettings settings_;
  TraceSpacePtr trace_space_;
  SparseOperator a_;
  std::vector<double> load_;
  TraceOperators trace_ops_;
  std::vector<double> z_load_;
  std::unique_ptr<StateSolver> state_solver_;
  struct TraceMassSolver;
  std::unique_ptr<TraceMassSolver> trace_mass_solver_;
};

/// Residual functionals <R(u), phi_i> or <R(p), phi_i> for every nodal basis
/// function of `mesh`, which must be the triplet's mesh or a refinement of it.
std::vector<double> residual_vector(const OptimalTriplet& triplet, ResidualKind kind, const ProblemData& data,
                                    const MeshPtr& mesh);

/// <R(u), test> or <R(p), test>; `test` lives on the triplet mesh or a refinement.
double residual_apply(const OptimalTriplet& triplet, const FeFunction& test, ResidualKind kind, const ProblemData& data);

}  // namespace fluxrec
