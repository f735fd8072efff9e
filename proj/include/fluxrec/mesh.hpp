#pragma once

// Conforming triangulations with tagged boundary, newest-vertex bisection and
// patch queries.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fluxrec/common.hpp"

namespace fluxrec {

enum class BoundaryTag : std::uint8_t { Interior, GammaA, GammaI };

std::string to_string(BoundaryTag tag);

/// Counterclockwise triangle. Local edge i is the edge opposite vertex i, and
/// `refinement_edge` names the edge opposite the newest vertex.
struct Triangle {
  std::array<VertexId, 3> v{};
  int refinement_edge = 0;
  int generation = 0;

  std::array<VertexId, 2> edge(int i) const { return {v[(i + 1) % 3], v[(i + 2) % 3]}; }
};

/// An edge of the triangulation. `tri[1]` is kNone on the boundary.
///
/// Interior faces: tri[0] < tri[1] and `normal` points out of tri[0].
/// Boundary faces: `normal` is the outward normal of the domain.
struct Face {
  std::array<VertexId, 2> v{};  // v[0] < v[1]
  std::array<TriangleId, 2> tri{kNone, kNone};
  std::array<int, 2> local_edge{-1, -1};  // index of this face inside tri[k]
  BoundaryTag tag = BoundaryTag::Interior;
  Point normal;
  double length = 0.0;

  bool is_boundary() const { return tri[1] == kNone; }
};

/// A tagged boundary edge used while building meshes.
struct BoundaryEdge {
  std::array<VertexId, 2> v{};
  BoundaryTag tag = BoundaryTag::GammaA;
};

/// Immutable conforming mesh. Refinement returns a new mesh.
class Mesh {
 public:
  /// Builds the face table and validates conformity and tagging. Vertex
  /// `parents` hold the endpoints of the edge each vertex bisected, or kNone
  /// for vertices of the initial mesh; `lineage` identifies the initial mesh.
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::span<const BoundaryEdge> boundary,
       std::vector<std::array<VertexId, 2>> parents, std::uint64_t lineage);

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  std::size_t face_count() const { return faces_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Face>& faces() const { return faces_; }
  Point vertex(VertexId id) const { return vertices_[static_cast<std::size_t>(id)]; }
  const Triangle& triangle(TriangleId id) const { return triangles_[static_cast<std::size_t>(id)]; }
  const Face& face(FaceId id) const { return faces_[static_cast<std::size_t>(id)]; }

  /// Face ids of the three local edges of triangle `t`.
  const std::array<FaceId, 3>& triangle_faces(TriangleId t) const { return triangle_faces_[static_cast<std::size_t>(t)]; }
  std::array<Point, 3> corners(TriangleId t) const;
  double area(TriangleId t) const;

  const std::vector<std::array<VertexId, 2>>& parents() const { return parents_; }
  std::uint64_t lineage() const { return lineage_; }

  /// All boundary faces as tagged edges, in face order.
  std::vector<BoundaryEdge> boundary_edges() const;
  std::vector<FaceId> faces_with_tag(BoundaryTag tag) const;
  /// Ascending ids of vertices that lie on at least one face with `tag`.
  std::vector<VertexId> vertices_with_tag(BoundaryTag tag) const;

 private:
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Face> faces_;
  std::vector<std::array<FaceId, 3>> triangle_faces_;
  std::vector<std::array<VertexId, 2>> parents_;
  std::uint64_t lineage_ = 0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Named built-in domain plus the sides that form the inaccessible boundary.
///
/// "unit_square": sides bottom, right, top, left.
/// "lshape": [0,1]^2 minus (1/2,1]^2 with sides bottom, right, notch_bottom,
/// notch_left, top, left.
struct DomainSpec {
  std::string name = "unit_square";
  std::vector<std::string> gamma_i{"bottom"};
};

std::vector<std::string> domain_side_names(const std::string& domain);

/// Initial mesh. Refinement edges are the longest edges, ties broken by the
/// smallest opposite vertex id.
MeshPtr build_initial_mesh(const DomainSpec& spec);

/// Newest-vertex bisection of every marked triangle with conforming closure.
MeshPtr bisect(const MeshPtr& mesh, std::span<const TriangleId> marked);
/// One sweep that marks every triangle.
MeshPtr bisect_all(const MeshPtr& mesh);

struct MeshSizes {
  std::vector<double> h_triangle;  // |T|^{1/2}
  std::vector<double> h_face;      // |F|
};

MeshSizes mesh_size(const Mesh& mesh);

struct Patches {
  std::vector<std::vector<TriangleId>> omega;   // T and its face neighbours
  std::vector<std::vector<TriangleId>> touching;  // triangles sharing a vertex with T
};

Patches patches(const Mesh& mesh);

/// True when `fine` was produced from `coarse` by bisection.
bool is_descendant(const Mesh& fine, const Mesh& coarse);

}  // namespace fluxrec
