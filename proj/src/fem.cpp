#include "fluxrec/fem.hpp"

#include <algorithm>
#include <limits>

#include "fluxrec/quadrature.hpp"

namespace fluxrec {
namespace {

double checked(double value, const char* what) {
  if (!std::isfinite(value)) throw std::domain_error(std::string("non-finite value of ") + what);
  return value;
}

std::size_t idx(std::int32_t i) { return static_cast<std::size_t>(i); }

}  // namespace

TraceSpace::TraceSpace(MeshPtr mesh) : mesh_(std::move(mesh)) {
  vertices_ = mesh_->vertices_with_tag(BoundaryTag::GammaI);
  if (vertices_.empty()) throw std::invalid_argument("trace space: mesh has no Gamma_i face");
  index_.assign(mesh_->vertex_count(), kNone);
  for (std::size_t k = 0; k < vertices_.size(); ++k) index_[idx(vertices_[k])] = static_cast<std::int32_t>(k);
}

FeFunction::FeFunction(MeshPtr m, std::vector<double> v) : mesh(std::move(m)), values(std::move(v)) {
  if (values.size() != mesh->vertex_count()) throw std::invalid_argument("FeFunction: coefficient count mismatch");
}

FeFunction FeFunction::zeros(MeshPtr m) {
  const std::size_t n = m->vertex_count();
  return FeFunction(std::move(m), std::vector<double>(n, 0.0));
}

TraceFunction::TraceFunction(TraceSpacePtr s, std::vector<double> v) : space(std::move(s)), values(std::move(v)) {
  if (values.size() != space->size()) throw std::invalid_argument("TraceFunction: coefficient count mismatch");
}

TraceFunction TraceFunction::zeros(TraceSpacePtr s) {
  const std::size_t m = s->size();
  return TraceFunction(std::move(s), std::vector<double>(m, 0.0));
}

std::array<Point, 3> basis_gradients(const Mesh& mesh, TriangleId t) {
  const auto c = mesh.corners(t);
  const double twice_area = cross(c[1] - c[0], c[2] - c[0]);
  std::array<Point, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point a = c[static_cast<std::size_t>((i + 1) % 3)];
    const Point b = c[static_cast<std::size_t>((i + 2) % 3)];
    g[static_cast<std::size_t>(i)] = {(a.y - b.y) / twice_area, (b.x - a.x) / twice_area};
  }
  return g;
}

Point gradient(const Mesh& mesh, TriangleId t, std::span<const double> values) {
  const auto g = basis_gradients(mesh, t);
  const auto& v = mesh.triangle(t).v;
  Point out;
  for (std::size_t i = 0; i < 3; ++i) out = out + values[idx(v[i])] * g[i];
  return out;
}

Point to_cartesian(const std::array<Point, 3>& c, const std::array<double, 3>& bary) {
  return {bary[0] * c[0].x + bary[1] * c[1].x + bary[2] * c[2].x, bary[0] * c[0].y + bary[1] * c[1].y + bary[2] * c[2].y};
}

SparseOperator assemble_stiffness(const Mesh& mesh, double alpha) {
  std::vector<SparseEntry> entries;
  entries.reserve(9 * mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto tid = static_cast<TriangleId>(t);
    const auto g = basis_gradients(mesh, tid);
    const double scale = alpha * mesh.area(tid);
    const auto& v = mesh.triangle(tid).v;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) entries.push_back({v[i], v[j], scale * dot(g[i], g[j])});
    }
  }
  const auto n = static_cast<std::int32_t>(mesh.vertex_count());
  return SparseOperator(n, n, entries);
}

SparseOperator assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag) {
  std::vector<SparseEntry> entries;
  for (const Face& f : mesh.faces()) {
    if (f.tag != tag) continue;
    const double diag = f.length / 3.0;
    const double off = f.length / 6.0;
    entries.push_back({f.v[0], f.v[0], diag});
    entries.push_back({f.v[1], f.v[1], diag});
    entries.push_back({f.v[0], f.v[1], off});
    entries.push_back({f.v[1], f.v[0], off});
  }
  const auto n = static_cast<std::int32_t>(mesh.vertex_count());
  return SparseOperator(n, n, entries);
}

SparseOperator assemble_bilinear(const Mesh& mesh, const CoefficientSet& coeffs) {
  coeffs.validate();
  if (mesh.faces_with_tag(BoundaryTag::GammaA).empty()) {
    throw std::invalid_argument("assemble_bilinear: no Gamma_a face, the bilinear form would be singular");
  }
  const SparseOperator k = assemble_stiffness(mesh, coeffs.alpha);
  const SparseOperator m = assemble_boundary_mass(mesh, BoundaryTag::GammaA);
  std::vector<SparseEntry> entries;
  entries.reserve(k.nnz() + m.nnz());
  for (const auto* op : {&k, &m}) {
    const double scale = op == &k ? 1.0 : coeffs.gamma;
    for (std::int32_t r = 0; r < op->rows(); ++r) {
      for (std::int32_t p = op->row_ptr()[idx(r)]; p < op->row_ptr()[idx(r) + 1]; ++p) {
        entries.push_back({r, op->col_index()[idx(p)], scale * op->values()[idx(p)]});
      }
    }
  }
  return SparseOperator(k.rows(), k.cols(), entries);
}

std::vector<double> assemble_boundary_load(const Mesh& mesh, BoundaryTag tag, const ScalarField& g, int gauss_points) {
  std::vector<double> b(mesh.vertex_count(), 0.0);
  const std::span<const quadrature::LinePoint> rule =
      gauss_points == 3 ? std::span<const quadrature::LinePoint>(quadrature::kGauss3)
                        : std::span<const quadrature::LinePoint>(quadrature::kGauss2);
  for (const Face& f : mesh.faces()) {
    if (f.tag != tag) continue;
    const Point a = mesh.vertex(f.v[0]);
    const Point d = mesh.vertex(f.v[1]) - a;
    for (const auto& q : rule) {
      const double value = checked(g(a + q.t * d), "boundary datum") * q.weight * f.length;
      b[idx(f.v[0])] += value * (1.0 - q.t);
      b[idx(f.v[1])] += value * q.t;
    }
  }
  return b;
}

std::vector<double> assemble_load(const Mesh& mesh, const ScalarField& f, const ScalarField& u_a,
                                  const CoefficientSet& coeffs) {
  std::vector<double> load(mesh.vertex_count(), 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto tid = static_cast<TriangleId>(t);
    const auto c = mesh.corners(tid);
    const double area = mesh.area(tid);
    const auto& v = mesh.triangle(tid).v;
    for (const auto& q : quadrature::kTriangleMidpoint) {
      const double value = checked(f(to_cartesian(c, q.bary)), "source f") * q.weight * area;
      for (std::size_t i = 0; i < 3; ++i) load[idx(v[i])] += value * q.bary[i];
    }
  }
  const std::vector<double> robin = assemble_boundary_load(mesh, BoundaryTag::GammaA, u_a, 2);
  for (std::size_t i = 0; i < load.size(); ++i) load[i] += coeffs.gamma * robin[i];
  return load;
}

TraceOperators assemble_trace_operators(const TraceSpace& space) {
  const Mesh& mesh = *space.mesh();
  std::vector<SparseEntry> mass_i;
  std::vector<SparseEntry> coupling;
  for (const Face& f : mesh.faces()) {
    if (f.tag != BoundaryTag::GammaI) continue;
    const std::array<std::int32_t, 2> k{space.index_of(f.v[0]), space.index_of(f.v[1])};
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        const double value = f.length * (a == b ? 1.0 / 3.0 : 1.0 / 6.0);
        mass_i.push_back({k[a], k[b], value});
        coupling.push_back({f.v[a], k[b], value});
      }
    }
  }
  const auto m = static_cast<std::int32_t>(space.size());
  const auto n = static_cast<std::int32_t>(mesh.vertex_count());
  return {SparseOperator(m, m, mass_i), SparseOperator(n, m, coupling), assemble_boundary_mass(mesh, BoundaryTag::GammaA)};
}

FeFunction interpolate(const ScalarField& field, const MeshPtr& mesh) {
  std::vector<double> values(mesh->vertex_count());
  for (std::size_t v = 0; v < values.size(); ++v) values[v] = checked(field(mesh->vertices()[v]), "interpolated field");
  return FeFunction(mesh, std::move(values));
}

TraceFunction interpolate_trace(const ScalarField& field, const TraceSpacePtr& space) {
  std::vector<double> values(space->size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = checked(field(space->mesh()->vertex(space->vertices()[k])), "interpolated trace");
  }
  return TraceFunction(space, std::move(values));
}

TraceFunction restrict_to_trace(const FeFunction& u, const TraceSpacePtr& space) {
  if (u.mesh != space->mesh()) throw std::invalid_argument("restrict_to_trace: mesh mismatch");
  std::vector<double> values(space->size());
  for (std::size_t k = 0; k < values.size(); ++k) values[k] = u.values[idx(space->vertices()[k])];
  return TraceFunction(space, std::move(values));
}

FeFunction extend_trace(const TraceFunction& q) {
  FeFunction u = FeFunction::zeros(q.space->mesh());
  for (std::size_t k = 0; k < q.values.size(); ++k) u.values[idx(q.space->vertices()[k])] = q.values[k];
  return u;
}

FeFunction transfer(const FeFunction& u, const MeshPtr& fine) {
  if (!is_descendant(*fine, *u.mesh)) throw std::invalid_argument("transfer: target mesh is not a refinement of the source");
  std::vector<double> values(fine->vertex_count());
  std::copy(u.values.begin(), u.values.end(), values.begin());
  for (std::size_t v = u.values.size(); v < values.size(); ++v) {
    const auto& p = fine->parents()[v];
    values[v] = 0.5 * (values[idx(p[0])] + values[idx(p[1])]);
  }
  return FeFunction(fine, std::move(values));
}

TraceFunction transfer_trace(const TraceFunction& q, const TraceSpacePtr& fine_space) {
  return restrict_to_trace(transfer(extend_trace(q), fine_space->mesh()), fine_space);
}

FunctionNorms norms(const FeFunction& u) {
  const Mesh& mesh = *u.mesh;
  double l2 = 0.0;
  double semi = 0.0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto tid = static_cast<TriangleId>(t);
    const auto& v = mesh.triangle(tid).v;
    const double a = u.values[idx(v[0])];
    const double b = u.values[idx(v[1])];
    const double c = u.values[idx(v[2])];
    const double area = mesh.area(tid);
    l2 += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c);
    const Point g = gradient(mesh, tid, u.values);
    semi += area * dot(g, g);
  }
  double ga = 0.0;
  double gi = 0.0;
  for (const Face& f : mesh.faces()) {
    if (!f.is_boundary()) continue;
    const double a = u.values[idx(f.v[0])];
    const double b = u.values[idx(f.v[1])];
    const double contribution = f.length / 3.0 * (a * a + a * b + b * b);
    (f.tag == BoundaryTag::GammaA ? ga : gi) += contribution;
  }
  FunctionNorms out;
  out.l2 = std::sqrt(l2);
  out.h1_semi = std::sqrt(semi);
  out.h1 = std::sqrt(l2 + semi);
  out.l2_gamma_a = std::sqrt(ga);
  out.l2_gamma_i = std::sqrt(gi);
  return out;
}

double l2_norm(const TraceFunction& q) { return norms(extend_trace(q)).l2_gamma_i; }

PointLocator::PointLocator(MeshPtr mesh) : mesh_(std::move(mesh)) {
  Point lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Point hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Point& p : mesh_->vertices()) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  const double width = std::max(hi.x - lo.x, hi.y - lo.y);
  const double cells = std::max(1.0, std::sqrt(static_cast<double>(mesh_->triangle_count())));
  cell_ = width / cells * (1.0 + 1e-9);
  lo_ = lo;
  nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell_)));
  buckets_.resize(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_));
  for (std::size_t t = 0; t < mesh_->triangle_count(); ++t) {
    const auto c = mesh_->corners(static_cast<TriangleId>(t));
    const double x0 = std::min({c[0].x, c[1].x, c[2].x});
    const double x1 = std::max({c[0].x, c[1].x, c[2].x});
    const double y0 = std::min({c[0].y, c[1].y, c[2].y});
    const double y1 = std::max({c[0].y, c[1].y, c[2].y});
    const int i0 = std::clamp(static_cast<int>((x0 - lo_.x) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((x1 - lo_.x) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((y0 - lo_.y) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((y1 - lo_.y) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<TriangleId>(t));
    }
  }
}

std::optional<PointLocator::Hit> PointLocator::locate(Point p) const {
  const double slack = 1e-12 * cell_;
  const int i = static_cast<int>(std::floor((p.x - lo_.x) / cell_));
  const int j = static_cast<int>(std::floor((p.y - lo_.y) / cell_));
  if (i < -1 || j < -1 || i > nx_ || j > ny_) return std::nullopt;
  const int ic = std::clamp(i, 0, nx_ - 1);
  const int jc = std::clamp(j, 0, ny_ - 1);
  std::optional<Hit> best;
  double best_min = -std::numeric_limits<double>::max();
  for (TriangleId t : buckets_[static_cast<std::size_t>(jc * nx_ + ic)]) {
    const auto c = mesh_->corners(t);
    const double twice_area = cross(c[1] - c[0], c[2] - c[0]);
    std::array<double, 3> bary{cross(c[1] - p, c[2] - p) / twice_area, cross(c[2] - p, c[0] - p) / twice_area, 0.0};
    bary[2] = 1.0 - bary[0] - bary[1];
    const double worst = std::min({bary[0], bary[1], bary[2]});
    if (worst > best_min) {
      best_min = worst;
      best = Hit{t, bary};
    }
  }
  if (!best || best_min < -slack - 1e-12) return std::nullopt;
  return best;
}

double PointLocator::evaluate(const FeFunction& u, Point p) const {
  const auto hit = locate(p);
  if (!hit) throw std::domain_error("point outside the mesh");
  const auto& v = mesh_->triangle(hit->triangle).v;
  return hit->bary[0] * u.values[idx(v[0])] + hit->bary[1] * u.values[idx(v[1])] + hit->bary[2] * u.values[idx(v[2])];
}

ScalarField as_field(const FeFunction& u) {
  auto locator = std::make_shared<const PointLocator>(u.mesh);
  return [locator, u](Point p) { return locator->evaluate(u, p); };
}

}  // namespace fluxrec
