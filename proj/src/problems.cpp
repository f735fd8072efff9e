#include "fluxrec/problems.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "fluxrec/fem.hpp"

namespace fluxrec {

void ProblemSpec::validate() const {
  coeffs.validate();
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("noise level must lie in [0,1]");
  if (!f || !u_a || !q_true) throw std::invalid_argument("problem " + name + ": missing data callable");
}

std::vector<std::string> builtin_problem_names() { return {"square_smooth", "square_jump", "lshape_spike"}; }

ProblemSpec builtin_problem(const std::string& name) {
  ProblemSpec p;
  p.name = name;
  p.coeffs = {1.0, 1.0, 1e-3};
  p.f = [](Point) { return 1.0; };
  p.u_a = [](Point) { return 0.0; };
  if (name == "square_smooth") {
    p.domain = {"unit_square", {"bottom"}};
    p.q_true = [](Point x) { return std::sin(std::numbers::pi * x.x); };
  } else if (name == "square_jump") {
    p.domain = {"unit_square", {"bottom"}};
    p.q_true = [](Point x) { return (x.x >= 0.25 && x.x <= 0.75) ? 1.0 : 0.0; };
  } else if (name == "lshape_spike") {
    p.domain = {"lshape", {"bottom"}};
    p.q_true = [](Point x) { return std::exp(-100.0 * (x.x - 0.5) * (x.x - 0.5)); };
  } else {
    throw std::invalid_argument("unknown problem '" + name + "' (valid: square_smooth, square_jump, lshape_spike)");
  }
  return p;
}

Measurement::Measurement(std::vector<std::vector<MeasurementSample>> chains) : chains_(std::move(chains)) {
  for (const auto& chain : chains_) {
    if (chain.size() < 2) throw std::invalid_argument("measurement: every chain needs at least two samples");
    for (const MeasurementSample& s : chain) {
      if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.value)) {
        throw std::invalid_argument("measurement: non-finite sample");
      }
    }
  }
  if (chains_.empty()) throw std::invalid_argument("measurement: no samples");
  index_segments();
}

std::size_t Measurement::sample_count() const {
  std::size_t n = 0;
  for (const auto& c : chains_) n += c.size();
  return n;
}

void Measurement::index_segments() {
  segments_.clear();
  Point lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
  Point hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& chain : chains_) {
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      segments_.push_back({{chain[i].x, chain[i].y}, {chain[i + 1].x, chain[i + 1].y}, chain[i].value, chain[i + 1].value});
    }
    for (const MeasurementSample& s : chain) {
      lo = {std::min(lo.x, s.x), std::min(lo.y, s.y)};
      hi = {std::max(hi.x, s.x), std::max(hi.y, s.y)};
    }
  }
  const double width = std::max({hi.x - lo.x, hi.y - lo.y, 1e-300});
  const double cells = std::max(1.0, std::sqrt(static_cast<double>(segments_.size())));
  cell_ = width / cells * (1.0 + 1e-9);
  lo_ = {lo.x - 1e-9 * width, lo.y - 1e-9 * width};
  nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo_.x) / cell_)) + 1);
  ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo_.y) / cell_)) + 1);
  buckets_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), {});
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const Segment& seg = segments_[s];
    const int i0 = std::clamp(static_cast<int>((std::min(seg.a.x, seg.b.x) - lo_.x) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((std::max(seg.a.x, seg.b.x) - lo_.x) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((std::min(seg.a.y, seg.b.y) - lo_.y) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((std::max(seg.a.y, seg.b.y) - lo_.y) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) buckets_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<std::int32_t>(s));
    }
  }
}

double Measurement::evaluate(Point p) const {
  const int i = std::clamp(static_cast<int>(std::floor((p.x - lo_.x) / cell_)), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor((p.y - lo_.y) / cell_)), 0, ny_ - 1);
  double best_dist = std::numeric_limits<double>::max();
  double best_value = 0.0;
  for (std::int32_t s : buckets_[static_cast<std::size_t>(j * nx_ + i)]) {
    const Segment& seg = segments_[static_cast<std::size_t>(s)];
    const Point d = seg.b - seg.a;
    const double t = std::clamp(dot(p - seg.a, d) / dot(d, d), 0.0, 1.0);
    const double dist = norm(p - (seg.a + t * d));
    if (dist < best_dist) {
      best_dist = dist;
      best_value = (1.0 - t) * seg.va + t * seg.vb;
    }
  }
  if (best_dist > 1e-9 * cell_ + 1e-12) throw std::domain_error("measurement evaluated off the sampled boundary");
  return best_value;
}

std::vector<std::vector<VertexId>> boundary_chains(const Mesh& mesh, BoundaryTag tag) {
  std::map<VertexId, std::vector<VertexId>> adjacent;
  for (const Face& f : mesh.faces()) {
    if (f.tag != tag) continue;
    adjacent[f.v[0]].push_back(f.v[1]);
    adjacent[f.v[1]].push_back(f.v[0]);
  }
  std::vector<std::vector<VertexId>> chains;
  std::map<VertexId, bool> visited;
  auto walk = [&](VertexId start) {
    std::vector<VertexId> chain{start};
    visited[start] = true;
    VertexId current = start;
    for (;;) {
      VertexId next = kNone;
      for (VertexId n : adjacent[current]) {
        if (!visited[n]) {
          next = n;
          break;
        }
      }
      if (next == kNone) break;
      chain.push_back(next);
      visited[next] = true;
      current = next;
    }
    // Closed loops return to their start.
    if (chain.size() > 2 && std::find(adjacent[current].begin(), adjacent[current].end(), start) != adjacent[current].end()) {
      chain.push_back(start);
    }
    chains.push_back(std::move(chain));
  };
  for (const auto& [v, nbrs] : adjacent) {
    if (nbrs.size() == 1 && !visited[v]) walk(v);
  }
  for (const auto& [v, nbrs] : adjacent) {
    if (!visited[v]) walk(v);
  }
  return chains;
}

Measurement generate_measurement(const ProblemSpec& problem, int extra_levels, std::optional<double> override_noise) {
  problem.validate();
  if (extra_levels < 2) throw std::invalid_argument("generate_measurement: extra_levels must be at least 2");
  const double noise = override_noise.value_or(problem.noise);
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("noise level must lie in [0,1]");

  MeshPtr mesh = build_initial_mesh(problem.domain);
  for (int level = 0; level < extra_levels; ++level) mesh = bisect_all(mesh);

  const SparseOperator a = assemble_bilinear(*mesh, problem.coeffs);
  std::vector<double> rhs = assemble_load(*mesh, problem.f, problem.u_a, problem.coeffs);
  const std::vector<double> flux = assemble_boundary_load(*mesh, BoundaryTag::GammaI, problem.q_true, 3);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= flux[i];
  const std::vector<double> u = StateSolver(a, SolverSettings{}).solve(rhs);

  std::mt19937_64 rng(problem.seed);
  auto uniform_pm1 = [&rng] {
    // 53 random mantissa bits mapped onto [-1, 1].
    return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
  };

  std::vector<std::vector<MeasurementSample>> chains;
  std::vector<double> sampled(u.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& ids : boundary_chains(*mesh, BoundaryTag::GammaA)) {
    std::vector<MeasurementSample> chain;
    for (VertexId v : ids) {
      const auto i = static_cast<std::size_t>(v);
      if (std::isnan(sampled[i])) sampled[i] = noise > 0.0 ? u[i] * (1.0 + noise * uniform_pm1()) : u[i];
      const Point x = mesh->vertex(v);
      chain.push_back({x.x, x.y, sampled[i]});
    }
    chains.push_back(std::move(chain));
  }
  Measurement m(std::move(chains));
  m.generation_triangles = mesh->triangle_count();
  m.generation_levels = extra_levels;
  return m;
}

ProblemData make_problem_data(const ProblemSpec& problem, MeasurementPtr measurement) {
  problem.validate();
  if (!measurement) throw std::invalid_argument("make_problem_data: missing measurement");
  ProblemData data;
  data.coeffs = problem.coeffs;
  data.f = problem.f;
  data.u_a = problem.u_a;
  data.z = [measurement](Point p) { return measurement->evaluate(p); };
  return data;
}

}  // namespace fluxrec
