#include "fluxrec/estimator.hpp"

#include <numeric>

#include "fluxrec/quadrature.hpp"

namespace fluxrec {
namespace {

std::size_t idx(std::int32_t i) { return static_cast<std::size_t>(i); }

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

ResidualSamples source_samples(const Mesh& mesh, TriangleId t, const ScalarField& f) {
  const auto c = mesh.corners(t);
  const double area = mesh.area(t);
  ResidualSamples s;
  for (const auto& q : quadrature::kTriangleDegree4) {
    s.values.push_back(f(to_cartesian(c, q.bary)));
    s.weights.push_back(q.weight * area);
  }
  return s;
}

// Both face residuals on one face, evaluated from the triangles adjacent to it.
std::pair<ResidualSamples, ResidualSamples> face_residual(const Mesh& mesh, FaceId fid, const OptimalTriplet& tr,
                                                          const ProblemData& data) {
  const Face& face = mesh.face(fid);
  const double alpha = data.coeffs.alpha;
  const double gamma = data.coeffs.gamma;

  const Point du0 = gradient(mesh, face.tri[0], tr.u.values);
  const Point dp0 = gradient(mesh, face.tri[0], tr.p.values);
  double flux_u = alpha * dot(du0, face.normal);
  double flux_p = alpha * dot(dp0, face.normal);
  if (!face.is_boundary()) {
    flux_u -= alpha * dot(gradient(mesh, face.tri[1], tr.u.values), face.normal);
    flux_p -= alpha * dot(gradient(mesh, face.tri[1], tr.p.values), face.normal);
  }

  const auto& rule = face.tag == BoundaryTag::GammaA ? std::span<const quadrature::LinePoint>(quadrature::kGauss3)
                                                      : std::span<const quadrature::LinePoint>(quadrature::kGauss2);
  const Point a = mesh.vertex(face.v[0]);
  const Point d = mesh.vertex(face.v[1]) - a;
  auto along = [&](const std::vector<double>& v, double t) {
    return (1.0 - t) * v[idx(face.v[0])] + t * v[idx(face.v[1])];
  };

  ResidualSamples j1;
  ResidualSamples j2;
  for (const auto& g : rule) {
    const double w = g.weight * face.length;
    j1.weights.push_back(w);
    j2.weights.push_back(w);
    switch (face.tag) {
      case BoundaryTag::Interior:
        j1.values.push_back(flux_u);
        j2.values.push_back(flux_p);
        break;
      case BoundaryTag::GammaA: {
        const Point x = a + g.t * d;
        const double u = along(tr.u.values, g.t);
        const double p = along(tr.p.values, g.t);
        j1.values.push_back(gamma * data.u_a(x) - gamma * u - flux_u);
        j2.values.push_back(u - data.z(x) - gamma * p - flux_p);
        break;
      }
      case BoundaryTag::GammaI: {
        const double qa = tr.q.values[idx(tr.q.space->index_of(face.v[0]))];
        const double qb = tr.q.values[idx(tr.q.space->index_of(face.v[1]))];
        j1.values.push_back(-((1.0 - g.t) * qa + g.t * qb) - flux_u);
        j2.values.push_back(-flux_p);
        break;
      }
    }
  }
  return {std::move(j1), std::move(j2)};
}

}  // namespace

double ResidualSamples::norm_sq() const {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * values[i] * values[i];
  return s;
}

double ResidualSamples::mean() const {
  double s = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    s += weights[i] * values[i];
    w += weights[i];
  }
  return s / w;
}

double ResidualSamples::deviation_sq() const {
  const double m = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += weights[i] * (values[i] - m) * (values[i] - m);
  return s;
}

double ElementIndicators::eta() const { return std::sqrt(sum(eta_sq)); }
double ElementIndicators::eta1() const { return std::sqrt(sum(eta1_sq)); }
double ElementIndicators::eta2() const { return std::sqrt(sum(eta2_sq)); }
double ElementIndicators::oscillation() const { return std::sqrt(sum(osc_f_sq) + sum(osc_j1_sq) + sum(osc_j2_sq)); }

ElementResiduals element_residuals(const OptimalTriplet& triplet, const ScalarField& f) {
  const Mesh& mesh = *triplet.u.mesh;
  ElementResiduals out;
  out.r1.reserve(mesh.triangle_count());
  out.r2.reserve(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    // div(alpha grad v_h) vanishes elementwise for P1 and constant alpha, so
    // R_{T,1} = f and R_{T,2} = 0.
    ResidualSamples r1 = source_samples(mesh, static_cast<TriangleId>(t), f);
    ResidualSamples r2 = r1;
    std::fill(r2.values.begin(), r2.values.end(), 0.0);
    out.r1.push_back(std::move(r1));
    out.r2.push_back(std::move(r2));
  }
  return out;
}

FaceJumps face_jumps(const OptimalTriplet& triplet, const ProblemData& data) {
  const Mesh& mesh = *triplet.u.mesh;
  FaceJumps out;
  out.j1.reserve(mesh.face_count());
  out.j2.reserve(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    auto [j1, j2] = face_residual(mesh, static_cast<FaceId>(f), triplet, data);
    out.j1.push_back(std::move(j1));
    out.j2.push_back(std::move(j2));
  }
  return out;
}

OscillationTerms oscillations(const OptimalTriplet& triplet, const ProblemData& data) {
  const Mesh& mesh = *triplet.u.mesh;
  OscillationTerms out;
  out.osc_f_sq.resize(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto tid = static_cast<TriangleId>(t);
    out.osc_f_sq[t] = mesh.area(tid) * source_samples(mesh, tid, data.f).deviation_sq();
  }
  const FaceJumps jumps = face_jumps(triplet, data);
  out.osc_j1_sq.resize(mesh.face_count());
  out.osc_j2_sq.resize(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const double h = mesh.face(static_cast<FaceId>(f)).length;
    out.osc_j1_sq[f] = h * jumps.j1[f].deviation_sq();
    out.osc_j2_sq[f] = h * jumps.j2[f].deviation_sq();
  }
  return out;
}

ElementIndicators estimate(const OptimalTriplet& triplet, const ProblemData& data) {
  const Mesh& mesh = *triplet.u.mesh;
  if (triplet.p.mesh != triplet.u.mesh || triplet.q.space->mesh() != triplet.u.mesh) {
    throw std::invalid_argument("estimate: triplet components live on different meshes");
  }
  const std::size_t nt = mesh.triangle_count();
  ElementIndicators ind;
  ind.eta1_sq.assign(nt, 0.0);
  ind.eta2_sq.assign(nt, 0.0);
  ind.eta_sq.assign(nt, 0.0);

  for (std::size_t t = 0; t < nt; ++t) {
    const auto tid = static_cast<TriangleId>(t);
    const double h2 = mesh.area(tid);  // h_T^2 = |T|
    const ResidualSamples r1 = source_samples(mesh, tid, data.f);
    double e1 = h2 * r1.norm_sq();
    double e2 = 0.0;  // R_{T,2} = 0 for P1 with constant alpha
    for (FaceId f : mesh.triangle_faces(tid)) {
      const auto [j1, j2] = face_residual(mesh, f, triplet, data);
      const double hf = mesh.face(f).length;
      e1 += hf * j1.norm_sq();
      e2 += hf * j2.norm_sq();
    }
    ind.eta1_sq[t] = e1;
    ind.eta2_sq[t] = e2;
    ind.eta_sq[t] = e1 + e2;
  }

  OscillationTerms osc = oscillations(triplet, data);
  ind.osc_f_sq = std::move(osc.osc_f_sq);
  ind.osc_j1_sq = std::move(osc.osc_j1_sq);
  ind.osc_j2_sq = std::move(osc.osc_j2_sq);
  return ind;
}

double global_estimator(const ElementIndicators& indicators, const std::optional<std::span<const TriangleId>>& subset) {
  if (!subset) return indicators.eta();
  double s = 0.0;
  for (TriangleId t : *subset) {
    if (t < 0 || idx(t) >= indicators.size()) throw std::out_of_range("global_estimator: triangle id out of range");
    s += indicators.eta_sq[idx(t)];
  }
  return std::sqrt(s);
}

}  // namespace fluxrec
