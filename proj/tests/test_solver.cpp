#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "fluxrec/driver.hpp"
#include "fluxrec/solver.hpp"
#include "test_support.hpp"

using namespace fluxrec;
using namespace fluxrec::testing;

namespace {

ScalarField constant(double c) {
  return [c](Point) { return c; };
}

ProblemData smooth_data() {
  ProblemData d;
  d.f = constant(1.0);
  d.u_a = constant(0.0);
  d.z = [](Point p) { return 0.05 + 0.02 * std::sin(3 * p.x + p.y); };
  return d;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

// Dense LU of the monolithic system
//   [ A    0    B      ] [u]   [ F   ]
//   [ -Ma  A    0      ] [p] = [ -bz ]
//   [ 0   -B^T  beta Mi] [q]   [ 0   ]
struct MonolithicSolution {
  Eigen::VectorXd u, p, q;
};

MonolithicSolution dense_oracle(const DiscreteSystem& s) {
  const Eigen::MatrixXd a(s.bilinear().to_eigen());
  const Eigen::MatrixXd ma(s.trace_operators().mass_a.to_eigen());
  const Eigen::MatrixXd mi(s.trace_operators().mass_i.to_eigen());
  const Eigen::MatrixXd b(s.trace_operators().coupling.to_eigen());
  const Eigen::Index n = a.rows();
  const Eigen::Index m = mi.rows();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * n + m, 2 * n + m);
  k.block(0, 0, n, n) = a;
  k.block(0, 2 * n, n, m) = b;
  k.block(n, 0, n, n) = -ma;
  k.block(n, n, n, n) = a;
  k.block(2 * n, n, m, n) = -b.transpose();
  k.block(2 * n, 2 * n, m, m) = s.data().coeffs.beta * mi;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n + m);
  rhs.head(n) = to_eigen(s.load());
  rhs.segment(n, n) = -to_eigen(s.measurement_load());
  const Eigen::VectorXd x = k.fullPivLu().solve(rhs);
  return {x.head(n), x.segment(n, n), x.tail(m)};
}

}  // namespace

TEST_CASE("state solve examples") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  for (InnerSolver inner : {InnerSolver::Direct, InnerSolver::Cg}) {
    SolverSettings settings;
    settings.inner_solver = inner;
    ProblemData d = smooth_data();
    d.f = constant(0.0);
    d.u_a = constant(2.5);
    const DiscreteSystem s(m, d, settings);
    const TraceFunction q0 = TraceFunction::zeros(s.trace_space());
    for (double v : s.solve_state(q0).values) CHECK(v == doctest::Approx(2.5).epsilon(1e-9));

    d.u_a = constant(0.0);
    const DiscreteSystem zero(m, d, settings);
    for (double v : zero.solve_state(q0).values) CHECK(std::abs(v) <= 1e-14);

    const DiscreteSystem f1(m, smooth_data(), settings);
    const Eigen::MatrixXd a(f1.bilinear().to_eigen());
    const Eigen::VectorXd expected = a.ldlt().solve(to_eigen(f1.load()));
    const auto u = f1.solve_state(q0).values;
    CHECK((to_eigen(u) - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("costate solve examples") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  const DiscreteSystem base(m, smooth_data(), {});
  const FeFunction u = base.solve_state(TraceFunction::zeros(base.trace_space()));

  ProblemData matched = smooth_data();
  matched.z = as_field(u);
  const DiscreteSystem s(m, matched, {});
  for (double v : s.solve_costate(u).values) CHECK(std::abs(v) <= 1e-14);

  ProblemData zero = smooth_data();
  zero.z = constant(0.0);
  const DiscreteSystem z0(m, zero, {});
  for (double v : z0.solve_costate(FeFunction::zeros(m)).values) CHECK(v == 0.0);

  const FeFunction one = interpolate(constant(1.0), m);
  const Eigen::MatrixXd a(z0.bilinear().to_eigen());
  const Eigen::VectorXd rhs = to_eigen(z0.trace_operators().mass_a.apply(one.values));
  const Eigen::VectorXd expected = a.ldlt().solve(rhs);
  CHECK((to_eigen(z0.solve_costate(one).values) - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("reduced CG matches the dense monolithic oracle") {
  for (const MeshPtr& m : {bisect_all(unit_square()), bisect_all(bisect_all(unit_square())), bisect_all(lshape())}) {
    REQUIRE(m->vertex_count() <= 50);
    for (InnerSolver inner : {InnerSolver::Direct, InnerSolver::Cg}) {
      SolverSettings settings;
      settings.inner_solver = inner;
      const DiscreteSystem s(m, smooth_data(), settings);
      const OptimalTriplet t = s.solve_optimality();
      const MonolithicSolution ref = dense_oracle(s);
      CHECK((to_eigen(t.u.values) - ref.u).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((to_eigen(t.p.values) - ref.p).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((to_eigen(t.q.values) - ref.q).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("optimality identity and reduced gradient at the optimum") {
  const MeshPtr m = bisect(bisect_all(bisect_all(lshape())), std::vector<TriangleId>{0, 1});
  SolverSettings settings;
  const DiscreteSystem s(m, smooth_data(), settings);
  const OptimalTriplet t = s.solve_optimality();
  const double beta = s.data().coeffs.beta;
  const TraceFunction p_trace = restrict_to_trace(t.p, s.trace_space());
  std::vector<double> defect(t.q.values.size());
  for (std::size_t k = 0; k < defect.size(); ++k) defect[k] = beta * t.q.values[k] - p_trace.values[k];
  CHECK(max_abs(defect) <= 100 * settings.cg_tol * (beta * max_abs(t.q.values) + max_abs(p_trace.values)));
  CHECK(max_abs(s.reduced_gradient(t.q).values) <= 10 * settings.cg_tol * max_abs(t.q.values));
}

TEST_CASE("reduced gradient is affine in beta") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  ProblemData d1 = smooth_data();
  ProblemData d2 = d1;
  d2.coeffs.beta = 2 * d1.coeffs.beta;
  const DiscreteSystem s1(m, d1, {});
  const DiscreteSystem s2(m, d2, {});
  std::mt19937_64 rng(5);
  const TraceFunction q(s1.trace_space(), random_vector(s1.trace_space()->size(), rng));
  const TraceFunction q2(s2.trace_space(), q.values);
  // g = beta q - M_i^{-1} B^T p, and p does not depend on beta.
  const auto g1 = s1.reduced_gradient(q).values;
  const auto g2 = s2.reduced_gradient(q2).values;
  for (std::size_t k = 0; k < g1.size(); ++k) {
    CHECK(g2[k] - g1[k] == doctest::Approx(d1.coeffs.beta * q.values[k]).epsilon(1e-9));
  }
}

TEST_CASE("reduced gradient matches central finite differences") {
  const MeshPtr m = bisect(bisect_all(bisect_all(unit_square())), std::vector<TriangleId>{0});
  const DiscreteSystem s(m, smooth_data(), {});
  std::mt19937_64 rng(11);
  const auto n = s.trace_space()->size();
  const TraceFunction q(s.trace_space(), random_vector(n, rng));
  const auto g = s.reduced_gradient(q).values;
  const auto& mi = s.trace_operators().mass_i;
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const auto w = random_vector(n, rng);
    TraceFunction plus = q, minus = q;
    for (std::size_t k = 0; k < n; ++k) {
      plus.values[k] += h * w[k];
      minus.values[k] -= h * w[k];
    }
    const double fd = (s.objective(plus) - s.objective(minus)) / (2 * h);
    const double analytic = mi.bilinear(g, w);
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::abs(analytic));
  }
}

TEST_CASE("reduced Hessian is symmetric") {
  const MeshPtr m = bisect_all(bisect_all(lshape()));
  const DiscreteSystem s(m, smooth_data(), {});
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto w1 = random_vector(s.trace_space()->size(), rng);
    const auto w2 = random_vector(s.trace_space()->size(), rng);
    const double a = kernels::dot(s.apply_reduced_hessian(w1), w2);
    const double b = kernels::dot(w1, s.apply_reduced_hessian(w2));
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
}

TEST_CASE("zero-residual data gives the zero flux") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  const DiscreteSystem base(m, smooth_data(), {});
  ProblemData d = smooth_data();
  d.z = as_field(base.solve_state(TraceFunction::zeros(base.trace_space())));
  const DiscreteSystem s(m, d, {});
  const OptimalTriplet t = s.solve_optimality();
  CHECK(max_abs(t.q.values) <= 1e-12);
  CHECK(max_abs(t.p.values) <= 1e-12);
}

TEST_CASE("large beta crushes the flux") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  ProblemData d = smooth_data();
  d.coeffs.beta = 1e6;
  const DiscreteSystem s(m, d, {});
  const OptimalTriplet t = s.solve_optimality();
  const FeFunction p0 = s.solve_costate(s.solve_state(TraceFunction::zeros(s.trace_space())));
  CHECK(l2_norm(t.q) <= 1e-4 * norms(p0).l2_gamma_i);
}

TEST_CASE("optimum is a minimum under sampled perturbations") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  const DiscreteSystem s(m, smooth_data(), {});
  const OptimalTriplet t = s.solve_optimality();
  const double j = s.objective(t.q);
  CHECK(j <= s.objective(TraceFunction::zeros(s.trace_space())));
  std::mt19937_64 rng(23);
  const double qmax = max_abs(t.q.values);
  for (int trial = 0; trial < 20; ++trial) {
    TraceFunction w = t.q;
    const auto r = random_vector(w.values.size(), rng);
    for (std::size_t k = 0; k < r.size(); ++k) w.values[k] += 1e-2 * qmax * r[k];
    CHECK(j <= s.objective(w));
  }
  CHECK(s.objective(t.u, t.q) == doctest::Approx(j).epsilon(1e-12));
}

TEST_CASE("objective decreases over nested refinements") {
  MeshPtr m = unit_square();
  double previous = std::numeric_limits<double>::infinity();
  SolverSettings settings;
  for (int k = 0; k < 5; ++k) {
    const DiscreteSystem s(m, smooth_data(), settings);
    const double j = s.objective(s.solve_optimality().q);
    CHECK(j <= previous + 10 * settings.cg_tol);
    previous = j;
    m = bisect(m, std::vector<TriangleId>{0});
  }
}

TEST_CASE("Galerkin orthogonality of the residual functionals") {
  MeshPtr m = bisect_all(lshape());
  SolverSettings settings;
  for (int level = 0; level < 3; ++level) {
    const ProblemData d = smooth_data();
    const DiscreteSystem s(m, d, settings);
    const OptimalTriplet t = s.solve_optimality();
    const auto rs = residual_vector(t, ResidualKind::State, d, m);
    const auto rc = residual_vector(t, ResidualKind::Costate, d, m);
    const double scale_s = max_abs(s.load()) + max_abs(s.bilinear().apply(t.u.values));
    const double scale_c = max_abs(s.trace_operators().mass_a.apply(t.u.values)) + max_abs(s.measurement_load());
    CHECK(max_abs(rs) <= 10 * settings.cg_tol * scale_s);
    CHECK(max_abs(rc) <= 10 * settings.cg_tol * scale_c);

    // residual_apply with a nodal basis function agrees with the vector entry.
    FeFunction hat = FeFunction::zeros(m);
    hat.values[3] = 1.0;
    CHECK(residual_apply(t, hat, ResidualKind::State, d) == doctest::Approx(rs[3]));
    CHECK(residual_apply(t, FeFunction::zeros(m), ResidualKind::Costate, d) == 0.0);

    // A hat function of a finer mesh is not orthogonal.
    const MeshPtr fine = bisect_all(m);
    FeFunction fine_hat = FeFunction::zeros(fine);
    fine_hat.values[m->vertex_count()] = 1.0;
    CHECK(std::abs(residual_apply(t, fine_hat, ResidualKind::State, d)) > 1e3 * settings.cg_tol * scale_s);
    m = bisect(m, std::vector<TriangleId>{0, 2});
  }
}

TEST_CASE("solver failures are reported") {
  const MeshPtr m = bisect_all(bisect_all(bisect_all(unit_square())));
  SolverSettings settings;
  settings.cg_max_iters = 1;
  settings.cg_tol = 1e-14;
  const DiscreteSystem s(m, smooth_data(), settings);
  try {
    (void)s.solve_optimality();
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations() == 1);
    CHECK(e.residual() > 0.0);
  }
  SolverSettings invalid;
  invalid.cg_tol = 0.0;
  CHECK_THROWS_AS(invalid.validate(), std::invalid_argument);
}

TEST_CASE("warm start reaches the same optimum") {
  const MeshPtr coarse = bisect_all(unit_square());
  const MeshPtr fine = bisect_all(bisect_all(coarse));
  const DiscreteSystem sc(coarse, smooth_data(), {});
  const DiscreteSystem sf(fine, smooth_data(), {});
  const OptimalTriplet tc = sc.solve_optimality();
  SolveReport cold, warm;
  const OptimalTriplet a = sf.solve_optimality(std::nullopt, &cold);
  const OptimalTriplet b = sf.solve_optimality(transfer_trace(tc.q, sf.trace_space()), &warm);
  for (std::size_t k = 0; k < a.q.values.size(); ++k) CHECK(a.q.values[k] == doctest::Approx(b.q.values[k]).epsilon(1e-7));
  CHECK(cold.relative_residual <= 1e-10);
  CHECK(warm.relative_residual <= 1e-10);
}
