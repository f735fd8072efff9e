#include "fluxrec/mesh.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <unordered_map>

namespace fluxrec {
namespace {

std::uint64_t edge_key(VertexId a, VertexId b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

struct Side {
  std::string name;
  Point a;
  Point b;
};

bool on_segment(Point p, const Side& side) {
  const Point d = side.b - side.a;
  const double len = norm(d);
  const Point r = p - side.a;
  if (std::abs(cross(d, r)) > 1e-12 * len) return false;
  const double t = dot(r, d) / (len * len);
  return t >= -1e-12 && t <= 1.0 + 1e-12;
}

struct DomainLayout {
  std::vector<Point> vertices;
  std::vector<std::array<VertexId, 3>> triangles;
  std::vector<Side> sides;
};

DomainLayout layout_for(const std::string& domain) {
  if (domain == "unit_square") {
    return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}},
            {{0, 1, 2}, {0, 2, 3}},
            {{"bottom", {0, 0}, {1, 0}}, {"right", {1, 0}, {1, 1}}, {"top", {1, 1}, {0, 1}}, {"left", {0, 1}, {0, 0}}}};
  }
  if (domain == "lshape") {
    return {{{0, 0}, {0.5, 0}, {1, 0}, {0, 0.5}, {0.5, 0.5}, {1, 0.5}, {0, 1}, {0.5, 1}},
            {{0, 1, 4}, {0, 4, 3}, {1, 2, 5}, {1, 5, 4}, {3, 4, 7}, {3, 7, 6}},
            {{"bottom", {0, 0}, {1, 0}},
             {"right", {1, 0}, {1, 0.5}},
             {"notch_bottom", {1, 0.5}, {0.5, 0.5}},
             {"notch_left", {0.5, 0.5}, {0.5, 1}},
             {"top", {0.5, 1}, {0, 1}},
             {"left", {0, 1}, {0, 0}}}};
  }
  throw std::invalid_argument("unknown domain '" + domain + "' (valid: unit_square, lshape)");
}

}  // namespace

std::string to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Interior:
      return "Interior";
    case BoundaryTag::GammaA:
      return "GammaA";
    case BoundaryTag::GammaI:
      return "GammaI";
  }
  return "?";
}

Mesh::Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::span<const BoundaryEdge> boundary,
           std::vector<std::array<VertexId, 2>> parents, std::uint64_t lineage)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      parents_(std::move(parents)),
      lineage_(lineage) {
  const auto nv = static_cast<VertexId>(vertices_.size());
  if (parents_.size() != vertices_.size()) throw std::invalid_argument("mesh: parent table size mismatch");
  if (triangles_.empty()) throw std::invalid_argument("mesh: no triangles");

  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Triangle& tri = triangles_[t];
    for (VertexId id : tri.v) {
      if (id < 0 || id >= nv) throw std::invalid_argument("mesh: triangle vertex id out of range");
    }
    if (tri.v[0] == tri.v[1] || tri.v[1] == tri.v[2] || tri.v[0] == tri.v[2]) {
      throw std::invalid_argument("mesh: triangle with repeated vertex");
    }
    if (tri.refinement_edge < 0 || tri.refinement_edge > 2) throw std::invalid_argument("mesh: bad refinement edge");
    if (!(area(static_cast<TriangleId>(t)) > 0.0)) {
      throw std::invalid_argument("mesh: triangle " + std::to_string(t) + " is not counterclockwise");
    }
  }

  struct HalfEdge {
    std::uint64_t key;
    TriangleId tri;
    int local;
  };
  std::vector<HalfEdge> half;
  half.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (int i = 0; i < 3; ++i) {
      const auto e = triangles_[t].edge(i);
      half.push_back({edge_key(e[0], e[1]), static_cast<TriangleId>(t), i});
    }
  }
  std::sort(half.begin(), half.end(), [](const HalfEdge& a, const HalfEdge& b) {
    return a.key != b.key ? a.key < b.key : a.tri < b.tri;
  });

  std::unordered_map<std::uint64_t, BoundaryTag> tags;
  tags.reserve(boundary.size());
  for (const BoundaryEdge& be : boundary) {
    if (be.tag == BoundaryTag::Interior) throw std::invalid_argument("mesh: boundary edge tagged Interior");
    tags[edge_key(be.v[0], be.v[1])] = be.tag;
  }

  triangle_faces_.assign(triangles_.size(), {kNone, kNone, kNone});
  std::size_t used_tags = 0;
  for (std::size_t i = 0; i < half.size();) {
    std::size_t j = i + 1;
    while (j < half.size() && half[j].key == half[i].key) ++j;
    if (j - i > 2) throw std::invalid_argument("mesh: edge shared by more than two triangles");

    Face face;
    face.v = {static_cast<VertexId>(half[i].key >> 32), static_cast<VertexId>(half[i].key & 0xffffffffULL)};
    face.tri[0] = half[i].tri;
    face.local_edge[0] = half[i].local;
    if (j - i == 2) {
      face.tri[1] = half[i + 1].tri;
      face.local_edge[1] = half[i + 1].local;
      if (tags.contains(half[i].key)) throw std::invalid_argument("mesh: interior edge carries a boundary tag");
    } else {
      const auto it = tags.find(half[i].key);
      if (it == tags.end()) {
        throw std::invalid_argument("mesh: untagged boundary edge (" + std::to_string(face.v[0]) + ", " +
                                    std::to_string(face.v[1]) + "); mesh is not conforming or tagging is incomplete");
      }
      face.tag = it->second;
      ++used_tags;
    }

    const auto e = triangles_[static_cast<std::size_t>(face.tri[0])].edge(face.local_edge[0]);
    const Point d = vertices_[static_cast<std::size_t>(e[1])] - vertices_[static_cast<std::size_t>(e[0])];
    face.length = norm(d);
    face.normal = {d.y / face.length, -d.x / face.length};

    const auto id = static_cast<FaceId>(faces_.size());
    for (std::size_t k = 0; k < j - i; ++k) {
      triangle_faces_[static_cast<std::size_t>(face.tri[k])][static_cast<std::size_t>(face.local_edge[k])] = id;
    }
    faces_.push_back(face);
    i = j;
  }
  if (used_tags != tags.size()) throw std::invalid_argument("mesh: boundary tag on an edge that is not a mesh edge");
}

std::array<Point, 3> Mesh::corners(TriangleId t) const {
  const Triangle& tri = triangle(t);
  return {vertex(tri.v[0]), vertex(tri.v[1]), vertex(tri.v[2])};
}

double Mesh::area(TriangleId t) const {
  const auto c = corners(t);
  return 0.5 * cross(c[1] - c[0], c[2] - c[0]);
}

std::vector<BoundaryEdge> Mesh::boundary_edges() const {
  std::vector<BoundaryEdge> out;
  for (const Face& f : faces_) {
    if (f.is_boundary()) out.push_back({f.v, f.tag});
  }
  return out;
}

std::vector<FaceId> Mesh::faces_with_tag(BoundaryTag tag) const {
  std::vector<FaceId> out;
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    if (faces_[f].tag == tag) out.push_back(static_cast<FaceId>(f));
  }
  return out;
}

std::vector<VertexId> Mesh::vertices_with_tag(BoundaryTag tag) const {
  std::vector<char> flag(vertices_.size(), 0);
  for (const Face& f : faces_) {
    if (f.tag == tag) flag[static_cast<std::size_t>(f.v[0])] = flag[static_cast<std::size_t>(f.v[1])] = 1;
  }
  std::vector<VertexId> out;
  for (std::size_t v = 0; v < flag.size(); ++v) {
    if (flag[v]) out.push_back(static_cast<VertexId>(v));
  }
  return out;
}

std::vector<std::string> domain_side_names(const std::string& domain) {
  std::vector<std::string> names;
  for (const Side& s : layout_for(domain).sides) names.push_back(s.name);
  return names;
}

MeshPtr build_initial_mesh(const DomainSpec& spec) {
  DomainLayout layout = layout_for(spec.name);

  std::set<std::string> gamma_i;
  for (const std::string& name : spec.gamma_i) {
    const bool known = std::any_of(layout.sides.begin(), layout.sides.end(), [&](const Side& s) { return s.name == name; });
    if (!known) throw std::invalid_argument("unknown side '" + name + "' for domain " + spec.name);
    gamma_i.insert(name);
  }
  if (gamma_i.empty()) throw std::invalid_argument("boundary partition incomplete: Gamma_i selection is empty");
  if (gamma_i.size() == layout.sides.size()) {
    throw std::invalid_argument("boundary partition incomplete: Gamma_a would be empty");
  }

  std::vector<Triangle> triangles;
  for (const auto& v : layout.triangles) {
    Triangle tri;
    tri.v = v;
    double best = -1.0;
    for (int i = 0; i < 3; ++i) {
      const auto e = tri.edge(i);
      const Point d = layout.vertices[static_cast<std::size_t>(e[1])] - layout.vertices[static_cast<std::size_t>(e[0])];
      const double len2 = dot(d, d);
      const bool longer = len2 > best * (1.0 + 1e-12);
      const bool tie = !longer && len2 >= best * (1.0 - 1e-12);
      if (longer || (tie && tri.v[i] < tri.v[tri.refinement_edge])) {
        if (longer) best = len2;
        tri.refinement_edge = i;
      }
    }
    triangles.push_back(tri);
  }

  std::unordered_map<std::uint64_t, int> count;
  for (const Triangle& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      const auto e = tri.edge(i);
      ++count[edge_key(e[0], e[1])];
    }
  }
  std::vector<BoundaryEdge> boundary;
  for (const Triangle& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      const auto e = tri.edge(i);
      if (count[edge_key(e[0], e[1])] != 1) continue;
      const Point a = layout.vertices[static_cast<std::size_t>(e[0])];
      const Point b = layout.vertices[static_cast<std::size_t>(e[1])];
      const auto side = std::find_if(layout.sides.begin(), layout.sides.end(),
                                     [&](const Side& s) { return on_segment(a, s) && on_segment(b, s); });
      if (side == layout.sides.end()) throw std::logic_error("initial mesh: boundary edge on no side");
      boundary.push_back({e, gamma_i.contains(side->name) ? BoundaryTag::GammaI : BoundaryTag::GammaA});
    }
  }

  std::uint64_t lineage = 0xcbf29ce484222325ULL;
  lineage = fnv1a(lineage, spec.name.data(), spec.name.size());
  for (const Point& p : layout.vertices) lineage = fnv1a(lineage, &p, sizeof(Point));
  for (const BoundaryEdge& be : boundary) {
    lineage = fnv1a(lineage, be.v.data(), sizeof(be.v));
    lineage = fnv1a(lineage, &be.tag, sizeof(be.tag));
  }

  std::vector<std::array<VertexId, 2>> parents(layout.vertices.size(), {kNone, kNone});
  return std::make_shared<const Mesh>(std::move(layout.vertices), std::move(triangles), boundary, std::move(parents),
                                      lineage);
}

MeshSizes mesh_size(const Mesh& mesh) {
  MeshSizes sizes;
  sizes.h_triangle.resize(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    sizes.h_triangle[t] = std::sqrt(mesh.area(static_cast<TriangleId>(t)));
  }
  sizes.h_face.resize(mesh.face_count());
  for (std::size_t f = 0; f < mesh.face_count(); ++f) sizes.h_face[f] = mesh.face(static_cast<FaceId>(f)).length;
  return sizes;
}

Patches patches(const Mesh& mesh) {
  const std::size_t nt = mesh.triangle_count();
  Patches out;
  out.omega.resize(nt);
  out.touching.resize(nt);

  for (std::size_t t = 0; t < nt; ++t) {
    out.omega[t].push_back(static_cast<TriangleId>(t));
    for (FaceId f : mesh.triangle_faces(static_cast<TriangleId>(t))) {
      const Face& face = mesh.face(f);
      if (face.is_boundary()) continue;
      out.omega[t].push_back(face.tri[0] == static_cast<TriangleId>(t) ? face.tri[1] : face.tri[0]);
    }
    std::sort(out.omega[t].begin(), out.omega[t].end());
  }

  std::vector<std::vector<TriangleId>> by_vertex(mesh.vertex_count());
  for (std::size_t t = 0; t < nt; ++t) {
    for (VertexId v : mesh.triangle(static_cast<TriangleId>(t)).v) {
      by_vertex[static_cast<std::size_t>(v)].push_back(static_cast<TriangleId>(t));
    }
  }
  for (std::size_t t = 0; t < nt; ++t) {
    auto& list = out.touching[t];
    for (VertexId v : mesh.triangle(static_cast<TriangleId>(t)).v) {
      const auto& around = by_vertex[static_cast<std::size_t>(v)];
      list.insert(list.end(), around.begin(), around.end());
    }
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

bool is_descendant(const Mesh& fine, const Mesh& coarse) {
  if (fine.lineage() != coarse.lineage()) return false;
  if (fine.vertex_count() < coarse.vertex_count() || fine.triangle_count() < coarse.triangle_count()) return false;
  for (std::size_t v = 0; v < coarse.vertex_count(); ++v) {
    if (!(fine.vertices()[v] == coarse.vertices()[v]) || fine.parents()[v] != coarse.parents()[v]) return false;
  }
  for (std::size_t v = coarse.vertex_count(); v < fine.vertex_count(); ++v) {
    const auto& p = fine.parents()[v];
    if (p[0] == kNone || p[0] >= static_cast<VertexId>(v) || p[1] >= static_cast<VertexId>(v)) return false;
  }
  return true;
}

}  // namespace fluxrec
