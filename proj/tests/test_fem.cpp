#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "fluxrec/fem.hpp"
#include "test_support.hpp"

using namespace fluxrec;
using namespace fluxrec::testing;

namespace {

// Reference triangle (0,0),(1,0),(0,1) with the bottom face tagged `bottom`
// and the other two faces tagged `rest`.
MeshPtr reference_triangle(BoundaryTag bottom, BoundaryTag rest) {
  const std::vector<Point> v{{0, 0}, {1, 0}, {0, 1}};
  const std::vector<Triangle> t{{{0, 1, 2}, 0, 0}};
  const std::vector<BoundaryEdge> be{{{0, 1}, bottom}, {{1, 2}, rest}, {{0, 2}, rest}};
  return std::make_shared<const Mesh>(v, t, be, std::vector<std::array<VertexId, 2>>(3, {kNone, kNone}), 1);
}

Eigen::MatrixXd dense(const SparseOperator& a) { return Eigen::MatrixXd(a.to_eigen()); }

}  // namespace

TEST_CASE("sparse operator sums duplicates and applies") {
  const std::vector<SparseEntry> e{{0, 0, 1.0}, {0, 1, 2.0}, {0, 0, 3.0}, {1, 1, -1.0}};
  const SparseOperator a(2, 2, e);
  CHECK(a.coeff(0, 0) == 4.0);
  CHECK(a.coeff(0, 1) == 2.0);
  CHECK(a.coeff(1, 0) == 0.0);
  CHECK(a.nnz() == 3);
  const std::vector<double> x{1, 1};
  CHECK(a.apply(x) == std::vector<double>{6, -1});
  CHECK(a.apply_transpose(x) == std::vector<double>{4, 1});
  CHECK(a.max_asymmetry() == 2.0);
  const std::vector<SparseEntry> bad{{2, 0, 1.0}};
  CHECK_THROWS(SparseOperator(2, 2, bad));
}

TEST_CASE("reference triangle stiffness") {
  const MeshPtr m = reference_triangle(BoundaryTag::GammaA, BoundaryTag::GammaI);
  const Eigen::MatrixXd k = dense(assemble_stiffness(*m, 1.0));
  Eigen::Matrix3d expected;
  expected << 1, -0.5, -0.5, -0.5, 0.5, 0, -0.5, 0, 0.5;
  CHECK((k - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("stiffness annihilates constants and is symmetric") {
  for (const MeshPtr& base : {unit_square(), lshape()}) {
    const MeshPtr m = bisect_all(bisect_all(bisect_all(base)));
    const SparseOperator k = assemble_stiffness(*m, 2.5);
    const std::vector<double> ones(m->vertex_count(), 3.0);
    for (double v : k.apply(ones)) CHECK(std::abs(v) <= 1e-13);
    CHECK(k.max_asymmetry() <= 1e-12 * k.max_abs());
    const SparseOperator a = assemble_bilinear(*m, {2.5, 0.7, 1.0});
    CHECK(a.max_asymmetry() <= 1e-12 * a.max_abs());
  }
}

TEST_CASE("bilinear form is positive definite on built-in meshes") {
  for (const MeshPtr& base : {unit_square(), lshape()}) {
    const MeshPtr m = bisect_all(bisect_all(base));
    const Eigen::MatrixXd a = dense(assemble_bilinear(*m, {}));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Galerkin consistency of the stiffness") {
  const MeshPtr m = bisect_all(bisect_all(lshape()));
  const double alpha = 1.7;
  const FeFunction v = interpolate([](Point p) { return std::sin(3 * p.x) + p.y * p.y; }, m);
  const SparseOperator k = assemble_stiffness(*m, alpha);
  double exact = 0.0;
  for (std::size_t t = 0; t < m->triangle_count(); ++t) {
    const Point g = gradient(*m, static_cast<TriangleId>(t), v.values);
    exact += alpha * dot(g, g) * m->area(static_cast<TriangleId>(t));
  }
  CHECK(k.bilinear(v.values, v.values) == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("bilinear form requires Gamma_a") {
  const MeshPtr m = reference_triangle(BoundaryTag::GammaI, BoundaryTag::GammaI);
  CHECK_THROWS_AS(assemble_bilinear(*m, {}), std::invalid_argument);
}

TEST_CASE("boundary mass on a unit face") {
  const MeshPtr m = reference_triangle(BoundaryTag::GammaA, BoundaryTag::GammaI);
  const SparseOperator ma = assemble_boundary_mass(*m, BoundaryTag::GammaA);
  CHECK(ma.coeff(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(ma.coeff(0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(ma.coeff(1, 0) == doctest::Approx(1.0 / 6.0));
  CHECK(ma.coeff(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(ma.coeff(2, 2) == 0.0);
}

TEST_CASE("load vector examples") {
  const MeshPtr m = reference_triangle(BoundaryTag::GammaA, BoundaryTag::GammaI);
  const ScalarField zero = [](Point) { return 0.0; };
  const ScalarField one = [](Point) { return 1.0; };
  for (double v : assemble_load(*m, zero, zero, {})) CHECK(v == 0.0);
  for (double v : assemble_load(*m, one, zero, {})) CHECK(v == doctest::Approx(1.0 / 6.0));
  const auto robin = assemble_load(*m, zero, one, {1.0, 2.0, 1e-3});
  CHECK(robin[0] == doctest::Approx(1.0));
  CHECK(robin[1] == doctest::Approx(1.0));
  CHECK(robin[2] == 0.0);

  // Quadratic integrands f * phi_i with f linear are integrated exactly:
  // int_T x phi_0 = 1/24, int_T x phi_1 = 1/12, int_T x phi_2 = 1/24.
  const auto lin = assemble_load(*m, [](Point p) { return p.x; }, zero, {});
  CHECK(lin[0] == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
  CHECK(lin[1] == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  CHECK(lin[2] == doctest::Approx(1.0 / 24.0).epsilon(1e-14));

  const ScalarField nan = [](Point) { return std::numeric_limits<double>::quiet_NaN(); };
  CHECK_THROWS_AS(assemble_load(*m, nan, zero, {}), std::domain_error);
}

TEST_CASE("trace operators") {
  const MeshPtr ref = reference_triangle(BoundaryTag::GammaI, BoundaryTag::GammaA);
  const TraceSpace ts(ref);
  const TraceOperators ops = assemble_trace_operators(ts);
  REQUIRE(ts.size() == 2);
  CHECK(ops.mass_i.coeff(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(ops.mass_i.coeff(0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(ops.mass_i.coeff(1, 1) == doctest::Approx(1.0 / 3.0));

  const MeshPtr m = bisect(bisect_all(bisect_all(lshape())), std::vector<TriangleId>{0, 3});
  const TraceSpace space(m);
  const TraceOperators t = assemble_trace_operators(space);
  double total = 0.0;
  const auto row_sums = t.mass_i.apply(std::vector<double>(space.size(), 1.0));
  for (double s : row_sums) total += s;
  CHECK(total == doctest::Approx(1.0));
  // Row sums equal half the length of the adjacent Gamma_i faces.
  std::vector<double> half_lengths(space.size(), 0.0);
  for (const Face& f : m->faces()) {
    if (f.tag != BoundaryTag::GammaI) continue;
    for (VertexId v : f.v) half_lengths[static_cast<std::size_t>(space.index_of(v))] += 0.5 * f.length;
  }
  for (std::size_t k = 0; k < space.size(); ++k) CHECK(row_sums[k] == doctest::Approx(half_lengths[k]));

  for (std::size_t j = 0; j < space.size(); ++j) {
    for (std::size_t k = 0; k < space.size(); ++k) {
      CHECK(t.coupling.coeff(space.vertices()[j], static_cast<std::int32_t>(k)) ==
            t.mass_i.coeff(static_cast<std::int32_t>(j), static_cast<std::int32_t>(k)));
    }
  }
  for (std::int32_t r = 0; r < t.coupling.rows(); ++r) {
    const bool has = t.coupling.row_ptr()[static_cast<std::size_t>(r) + 1] > t.coupling.row_ptr()[static_cast<std::size_t>(r)];
    CHECK(has == (space.index_of(r) != kNone));
  }

  const MeshPtr no_gamma_i = reference_triangle(BoundaryTag::GammaA, BoundaryTag::GammaA);
  CHECK_THROWS(TraceSpace(no_gamma_i));
}

TEST_CASE("interpolation") {
  const MeshPtr m = unit_square();
  const FeFunction s = interpolate([](Point p) { return p.x + p.y; }, m);
  CHECK(s.values[2] == 2.0);
  for (double v : interpolate([](Point) { return 5.0; }, m).values) CHECK(v == 5.0);
  const MeshPtr fine = bisect_all(bisect_all(m));
  const FeFunction u = interpolate([](Point p) { return std::cos(p.x) * p.y; }, fine);
  CHECK(interpolate(as_field(u), fine).values == u.values);
  CHECK_THROWS_AS(interpolate([](Point) { return std::numeric_limits<double>::infinity(); }, m), std::domain_error);
}

TEST_CASE("transfer is exact prolongation") {
  const MeshPtr coarse = bisect_all(lshape());
  const MeshPtr fine = bisect(bisect_all(coarse), std::vector<TriangleId>{1, 5, 9});
  const FeFunction one = transfer(interpolate([](Point) { return 1.0; }, coarse), fine);
  for (double v : one.values) CHECK(v == 1.0);

  const FeFunction u = interpolate([](Point p) { return std::exp(p.x) - p.y; }, coarse);
  const FeFunction uf = transfer(u, fine);
  CHECK(norms(uf).h1 == doctest::Approx(norms(u).h1).epsilon(1e-12));
  CHECK(norms(uf).l2_gamma_a == doctest::Approx(norms(u).l2_gamma_a).epsilon(1e-12));
  for (std::size_t v = 0; v < coarse->vertex_count(); ++v) CHECK(uf.values[v] == u.values[v]);

  // Midpoint of an edge with endpoint values 0 and 2.
  const MeshPtr sq = unit_square();
  const FeFunction diag(sq, {0.0, 1.0, 2.0, 1.0});
  CHECK(transfer(diag, bisect_all(sq)).values[4] == 1.0);

  // Nestedness: transferred back at coarse vertices.
  CHECK_THROWS_AS(transfer(u, unit_square()), std::invalid_argument);
  CHECK_THROWS_AS(transfer(uf, coarse), std::invalid_argument);

  const TraceSpacePtr cs = std::make_shared<const TraceSpace>(coarse);
  const TraceSpacePtr fs = std::make_shared<const TraceSpace>(fine);
  const TraceFunction q = interpolate_trace([](Point p) { return p.x * p.x; }, cs);
  const TraceFunction qf = transfer_trace(q, fs);
  CHECK(l2_norm(qf) == doctest::Approx(l2_norm(q)).epsilon(1e-12));
  const TraceFunction back = restrict_to_trace(transfer(extend_trace(q), fine), fs);
  CHECK(back.values == qf.values);
}

TEST_CASE("norms of simple functions") {
  const MeshPtr m = bisect_all(bisect_all(unit_square()));
  const FunctionNorms c = norms(interpolate([](Point) { return 1.0; }, m));
  CHECK(c.l2 == doctest::Approx(1.0));
  CHECK(c.h1_semi == doctest::Approx(0.0));
  const FunctionNorms x = norms(interpolate([](Point p) { return p.x; }, m));
  CHECK(x.l2 * x.l2 == doctest::Approx(1.0 / 3.0));
  CHECK(x.h1_semi == doctest::Approx(1.0));
  CHECK(x.l2_gamma_i * x.l2_gamma_i == doctest::Approx(1.0 / 3.0));
  const TraceSpacePtr ts = std::make_shared<const TraceSpace>(m);
  CHECK(l2_norm(interpolate_trace([](Point p) { return p.x; }, ts)) == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("point location") {
  const MeshPtr m = bisect(bisect_all(lshape()), std::vector<TriangleId>{2});
  const PointLocator loc(m);
  const FeFunction u = interpolate([](Point p) { return 2 * p.x - 3 * p.y + 1; }, m);
  for (Point p : {Point{0.1, 0.2}, Point{0.49, 0.9}, Point{0.9, 0.4}, Point{0, 0}, Point{0.5, 0.5}}) {
    CHECK(loc.evaluate(u, p) == doctest::Approx(2 * p.x - 3 * p.y + 1));
  }
  CHECK_FALSE(loc.locate({0.8, 0.8}).has_value());
  CHECK_THROWS(loc.evaluate(u, {0.8, 0.8}));
}
