#include "fluxrec/solver.hpp"

#include <algorithm>

#include <Eigen/SparseCholesky>

#include "fluxrec/kernels.hpp"
#include "fluxrec/quadrature.hpp"

namespace fluxrec {
namespace {

using EigenVector = Eigen::Map<const Eigen::VectorXd>;

class Cholesky {
 public:
  explicit Cholesky(const SparseOperator& op) : matrix_(op.to_eigen()) {
    factor_.compute(matrix_);
    if (factor_.info() != Eigen::Success) throw std::runtime_error("sparse Cholesky factorization failed");
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    const Eigen::VectorXd x = factor_.solve(EigenVector(rhs.data(), static_cast<Eigen::Index>(rhs.size())));
    return {x.data(), x.data() + x.size()};
  }

 private:
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> factor_;
};

}  // namespace

void SolverSettings::validate() const {
  if (!(cg_tol > 0.0)) throw std::invalid_argument("cg_tol must be positive");
  if (cg_max_iters < 1) throw std::invalid_argument("cg_max_iters must be at least 1");
}

int conjugate_gradient(const SparseOperator& a, std::span<const double> rhs, std::span<double> x, double rel_tol,
                       int max_iters) {
  const std::size_t n = rhs.size();
  const std::vector<double> diag = a.diagonal();
  std::vector<double> r(n);
  std::vector<double> z(n);
  std::vector<double> d(n);
  std::vector<double> ad(n);

  const double rhs_norm = std::sqrt(kernels::dot(rhs, rhs));
  if (rhs_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  a.apply(x, ad);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ad[i];
  kernels::diag_solve(diag, r, z);
  d = z;
  double rz = kernels::dot(r, z);
  double res = std::sqrt(kernels::dot(r, r)) / rhs_norm;
  for (int it = 0; it < max_iters; ++it) {
    if (res <= rel_tol) return it;
    a.apply(d, ad);
    const double step = rz / kernels::dot(d, ad);
    kernels::axpy(step, d, x);
    kernels::axpy(-step, ad, r);
    kernels::diag_solve(diag, r, z);
    const double rz_next = kernels::dot(r, z);
    kernels::xpby(z, rz_next / rz, d);
    rz = rz_next;
    res = std::sqrt(kernels::dot(r, r)) / rhs_norm;
  }
  if (res <= rel_tol) return max_iters;
  throw SolverError("conjugate gradient did not converge", max_iters, res);
}

struct StateSolver::Impl {
  SparseOperator op;
  SolverSettings settings;
  std::optional<Cholesky> direct;
};

StateSolver::StateSolver(const SparseOperator& a, const SolverSettings& settings) : impl_(std::make_unique<Impl>()) {
  impl_->settings = settings;
  if (settings.inner_solver == InnerSolver::Direct) {
    impl_->direct.emplace(a);
  } else {
    impl_->op = a;
  }
}

StateSolver::~StateSolver() = default;
StateSolver::StateSolver(StateSolver&&) noexcept = default;
StateSolver& StateSolver::operator=(StateSolver&&) noexcept = default;

std::vector<double> StateSolver::solve(std::span<const double> rhs) const {
  if (impl_->direct) return impl_->direct->solve(rhs);
  std::vector<double> x(rhs.size(), 0.0);
  conjugate_gradient(impl_->op, rhs, x, impl_->settings.cg_tol / 10.0, std::max(impl_->settings.cg_max_iters, 10 * static_cast<int>(rhs.size())));
  return x;
}

struct DiscreteSystem::TraceMassSolver {
  explicit TraceMassSolver(const SparseOperator& m) : factor(m) {}
  Cholesky factor;
};

DiscreteSystem::DiscreteSystem(MeshPtr mesh, ProblemData data, SolverSettings settings)
    : mesh_(std::move(mesh)), data_(std::move(data)), settings_(settings) {
  settings_.validate();
  data_.coeffs.validate();
  trace_space_ = std::make_shared<const TraceSpace>(mesh_);
  a_ = assemble_bilinear(*mesh_, data_.coeffs);
  load_ = assemble_load(*mesh_, data_.f, data_.u_a, data_.coeffs);
  trace_ops_ = assemble_trace_operators(*trace_space_);
  z_load_ = assemble_boundary_load(*mesh_, BoundaryTag::GammaA, data_.z, 3);
  state_solver_ = std::make_unique<StateSolver>(a_, settings_);
  trace_mass_solver_ = std::make_unique<TraceMassSolver>(trace_ops_.mass_i);
}

DiscreteSystem::~DiscreteSystem() = default;
DiscreteSystem::DiscreteSystem(DiscreteSystem&&) noexcept = default;
DiscreteSystem& DiscreteSystem::operator=(DiscreteSystem&&) noexcept = default;

FeFunction DiscreteSystem::solve_state(const TraceFunction& q) const {
  if (q.values.size() != trace_space_->size()) throw std::invalid_argument("solve_state: flux not on this trace space");
  std::vector<double> rhs = trace_ops_.coupling.apply(q.values);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = load_[i] - rhs[i];
  return FeFunction(mesh_, state_solver_->solve(rhs));
}

FeFunction DiscreteSystem::solve_costate(const FeFunction& u) const {
  if (u.values.size() != mesh_->vertex_count()) throw std::invalid_argument("solve_costate: state not on this mesh");
  std::vector<double> rhs = trace_ops_.mass_a.apply(u.values);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= z_load_[i];
  return FeFunction(mesh_, state_solver_->solve(rhs));
}

std::vector<double> DiscreteSystem::solve_trace_mass(std::span<const double> r) const {
  return trace_mass_solver_->factor.solve(r);
}

TraceFunction DiscreteSystem::reduced_gradient(const TraceFunction& q) const {
  const FeFunction p = solve_costate(solve_state(q));
  std::vector<double> r = trace_ops_.mass_i.apply(q.values);
  const std::vector<double> btp = trace_ops_.coupling.apply_transpose(p.values);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = data_.coeffs.beta * r[k] - btp[k];
  return TraceFunction(trace_space_, solve_trace_mass(r));
}

double DiscreteSystem::objective(const FeFunction& u, const TraceFunction& q) const {
  double misfit = 0.0;
  for (const Face& f : mesh_->faces()) {
    if (f.tag != BoundaryTag::GammaA) continue;
    const Point a = mesh_->vertex(f.v[0]);
    const Point d = mesh_->vertex(f.v[1]) - a;
    const double ua = u.values[static_cast<std::size_t>(f.v[0])];
    const double ub = u.values[static_cast<std::size_t>(f.v[1])];
    for (const auto& g : quadrature::kGauss3) {
      const double diff = (1.0 - g.t) * ua + g.t * ub - data_.z(a + g.t * d);
      misfit += g.weight * f.length * diff * diff;
    }
  }
  return 0.5 * misfit + 0.5 * data_.coeffs.beta * trace_ops_.mass_i.bilinear(q.values, q.values);
}

double DiscreteSystem::objective(const TraceFunction& q) const { return objective(solve_state(q), q); }

std::vector<double> DiscreteSystem::apply_reduced_hessian(std::span<const double> w) const {
  const std::vector<double> y = state_solver_->solve(trace_ops_.coupling.apply(w));
  const std::vector<double> t = state_solver_->solve(trace_ops_.mass_a.apply(y));
  std::vector<double> out = trace_ops_.mass_i.apply(w);
  const std::vector<double> btt = trace_ops_.coupling.apply_transpose(t);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = data_.coeffs.beta * out[k] + btt[k];
  return out;
}

// Preconditioned CG on H q = B^T p0 with p0 the costate of the zero-flux
// state. In exact arithmetic M_i^{-1} r equals the reduced gradient
// beta q - p|_{Gamma_i}, so the stopping test also bounds the pointwise
// optimality defect.
OptimalTriplet DiscreteSystem::solve_optimality(const std::optional<TraceFunction>& warm_start,
                                                SolveReport* report) const {
  const std::size_t m = trace_space_->size();
  const double beta = data_.coeffs.beta;
  const FeFunction u0 = solve_state(TraceFunction::zeros(trace_space_));
  const FeFunction p0 = solve_costate(u0);
  const std::vector<double> b = trace_ops_.coupling.apply_transpose(p0.values);

  std::vector<double> x(m, 0.0);
  if (warm_start) {
    if (warm_start->values.size() != m) throw std::invalid_argument("solve_optimality: warm start on a different trace space");
    x = warm_start->values;
  }

  const std::vector<double> mb = solve_trace_mass(b);
  const double b_norm = std::sqrt(std::max(0.0, kernels::dot(b, mb)));
  SolveReport local;
  if (b_norm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
  } else {
    std::vector<double> r(m);
    std::vector<double> z;
    std::vector<double> d;
    auto true_residual = [&] {
      const std::vector<double> hx = apply_reduced_hessian(x);
      for (std::size_t k = 0; k < m; ++k) r[k] = b[k] - hx[k];
      z = solve_trace_mass(r);
    };
    // z = M_i^{-1} r = p|_{Gamma_i} - beta x (exact arithmetic).
    auto converged = [&](double rz) {
      const double rel = std::sqrt(std::max(0.0, rz)) / b_norm;
      local.relative_residual = rel;
      if (rel > settings_.cg_tol) return false;
      double scale = 0.0;
      double defect = 0.0;
      double xmax = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        xmax = std::max(xmax, std::abs(x[k]));
        scale = std::max(scale, std::abs(beta * x[k] + z[k]));
        defect = std::max(defect, std::abs(z[k]));
      }
      return defect <= settings_.cg_tol * (beta * xmax + scale);
    };

    true_residual();
    double rz = kernels::dot(r, z);
    d = z;
    int it = 0;
    bool done = converged(rz);
    while (!done) {
      if (it >= settings_.cg_max_iters) {
        throw SolverError("reduced conjugate gradient did not converge", it, local.relative_residual);
      }
      const std::vector<double> hd = apply_reduced_hessian(d);
      const double step = rz / kernels::dot(d, hd);
      kernels::axpy(step, d, x);
      kernels::axpy(-step, hd, r);
      z = solve_trace_mass(r);
      const double rz_next = kernels::dot(r, z);
      kernels::xpby(z, rz_next / rz, d);
      rz = rz_next;
      ++it;
      if (converged(rz)) {
        // Confirm against the recomputed residual; recurrence drift restarts CG.
        true_residual();
        rz = kernels::dot(r, z);
        done = converged(rz);
        if (!done) d = z;
      }
    }
    local.outer_iterations = it;
  }
  if (report != nullptr) *report = local;

  OptimalTriplet triplet;
  triplet.q = TraceFunction(trace_space_, std::move(x));
  triplet.u = solve_state(triplet.q);
  triplet.p = solve_costate(triplet.u);
  return triplet;
}

std::vector<double> residual_vector(const OptimalTriplet& triplet, ResidualKind kind, const ProblemData& data,
                                    const MeshPtr& mesh) {
  const SparseOperator a = assemble_bilinear(*mesh, data.coeffs);
  if (kind == ResidualKind::State) {
    const FeFunction u = mesh == triplet.u.mesh ? triplet.u : transfer(triplet.u, mesh);
    const FeFunction q = mesh == triplet.u.mesh ? extend_trace(triplet.q) : transfer(extend_trace(triplet.q), mesh);
    std::vector<double> r = assemble_load(*mesh, data.f, data.u_a, data.coeffs);
    const std::vector<double> bq = assemble_boundary_mass(*mesh, BoundaryTag::GammaI).apply(q.values);
    const std::vector<double> au = a.apply(u.values);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= bq[i] + au[i];
    return r;
  }
  const FeFunction u = mesh == triplet.u.mesh ? triplet.u : transfer(triplet.u, mesh);
  const FeFunction p = mesh == triplet.p.mesh ? triplet.p : transfer(triplet.p, mesh);
  std::vector<double> r = assemble_boundary_mass(*mesh, BoundaryTag::GammaA).apply(u.values);
  const std::vector<double> bz = assemble_boundary_load(*mesh, BoundaryTag::GammaA, data.z, 3);
  const std::vector<double> ap = a.apply(p.values);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= bz[i] + ap[i];
  return r;
}

double residual_apply(const OptimalTriplet& triplet, const FeFunction& test, ResidualKind kind, const ProblemData& data) {
  const std::vector<double> r = residual_vector(triplet, kind, data, test.mesh);
  return kernels::dot(r, test.values);
}

}  // namespace fluxrec
