// Newest-vertex bisection.
//
// Marking is edge based: the refinement edge of every marked triangle is
// flagged, and a closure pass flags the refinement edge of any triangle that
// has some other flagged edge. Each triangle with a flagged refinement edge is
// then bisected, and each child is bisected again if its own refinement edge
// (one of the parent's other two edges) is flagged. Because flags live on
// shared edges the result is conforming.

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "fluxrec/mesh.hpp"

namespace fluxrec {
namespace {

std::uint64_t edge_key(VertexId a, VertexId b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

struct Builder {
  std::vector<Point> vertices;
  std::vector<std::array<VertexId, 2>> parents;
  std::unordered_map<std::uint64_t, VertexId> midpoints;  // flagged edge -> new vertex
  std::vector<Triangle> out;

  void split(const Triangle& tri) {
    const int r = tri.refinement_edge;
    const auto e = tri.edge(r);
    const auto it = midpoints.find(edge_key(e[0], e[1]));
    if (it == midpoints.end()) {
      out.push_back(tri);
      return;
    }
    const VertexId m = it->second;
    const VertexId apex = tri.v[static_cast<std::size_t>(r)];
    // (apex, e0, m) and (apex, m, e1) keep the counterclockwise orientation;
    // m is the newest vertex of both.
    split(Triangle{{apex, e[0], m}, 2, tri.generation + 1});
    split(Triangle{{apex, m, e[1]}, 1, tri.generation + 1});
  }
};

}  // namespace

MeshPtr bisect(const MeshPtr& mesh_ptr, std::span<const TriangleId> marked) {
  const Mesh& mesh = *mesh_ptr;
  const auto nt = static_cast<TriangleId>(mesh.triangle_count());
  for (TriangleId t : marked) {
    if (t < 0 || t >= nt) throw std::out_of_range("bisect: marked triangle id " + std::to_string(t) + " out of range");
  }
  if (marked.empty()) return mesh_ptr;

  std::vector<char> flagged(mesh.face_count(), 0);
  std::deque<TriangleId> queue;
  auto flag_face = [&](FaceId f) {
    if (flagged[static_cast<std::size_t>(f)]) return;
    flagged[static_cast<std::size_t>(f)] = 1;
    for (TriangleId t : mesh.face(f).tri) {
      if (t != kNone) queue.push_back(t);
    }
  };
  for (TriangleId t : marked) flag_face(mesh.triangle_faces(t)[static_cast<std::size_t>(mesh.triangle(t).refinement_edge)]);

  const std::size_t budget = 10 * mesh.triangle_count();
  std::size_t steps = 0;
  while (!queue.empty()) {
    if (++steps > budget) throw std::logic_error("bisect: conforming closure exceeded its step budget");
    const TriangleId t = queue.front();
    queue.pop_front();
    const auto& faces = mesh.triangle_faces(t);
    const FaceId refinement = faces[static_cast<std::size_t>(mesh.triangle(t).refinement_edge)];
    if (flagged[static_cast<std::size_t>(refinement)]) continue;
    const bool any = std::any_of(faces.begin(), faces.end(), [&](FaceId f) { return flagged[static_cast<std::size_t>(f)]; });
    if (any) flag_face(refinement);
  }

  Builder b;
  b.vertices = mesh.vertices();
  b.parents = mesh.parents();
  std::vector<BoundaryEdge> boundary;
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& face = mesh.face(static_cast<FaceId>(f));
    if (!flagged[f]) {
      if (face.is_boundary()) boundary.push_back({face.v, face.tag});
      continue;
    }
    const auto m = static_cast<VertexId>(b.vertices.size());
    b.vertices.push_back(midpoint(mesh.vertex(face.v[0]), mesh.vertex(face.v[1])));
    b.parents.push_back(face.v);
    b.midpoints.emplace(edge_key(face.v[0], face.v[1]), m);
    if (face.is_boundary()) {
      boundary.push_back({{face.v[0], m}, face.tag});
      boundary.push_back({{m, face.v[1]}, face.tag});
    }
  }

  b.out.reserve(mesh.triangle_count() + 3 * b.midpoints.size());
  for (const Triangle& tri : mesh.triangles()) b.split(tri);

  return std::make_shared<const Mesh>(std::move(b.vertices), std::move(b.out), boundary, std::move(b.parents),
                                      mesh.lineage());
}

MeshPtr bisect_all(const MeshPtr& mesh) {
  std::vector<TriangleId> all(mesh->triangle_count());
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = static_cast<TriangleId>(t);
  return bisect(mesh, all);
}

}  // namespace fluxrec
