#pragma once

// Linear (P1) finite elements on a Mesh: spaces, assembly of the weighted
// bilinear form a(u,v) = (alpha grad u, grad v) + (gamma u, v)_{Gamma_a},
// boundary couplings, interpolation, prolongation and norms.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fluxrec/common.hpp"
#include "fluxrec/mesh.hpp"
#include "fluxrec/sparse.hpp"

namespace fluxrec {

/// Degrees of freedom of V_h restricted to the inaccessible boundary: the
/// Gamma_i vertices in ascending id order.
class TraceSpace {
 public:
  explicit TraceSpace(MeshPtr mesh);

  const MeshPtr& mesh() const { return mesh_; }
  std::size_t size() const { return vertices_.size(); }
  const std::vector<VertexId>& vertices() const { return vertices_; }
  /// Trace index of a mesh vertex, or kNone.
  std::int32_t index_of(VertexId v) const { return index_[static_cast<std::size_t>(v)]; }

 private:
  MeshPtr mesh_;
  std::vector<VertexId> vertices_;
  std::vector<std::int32_t> index_;
};

using TraceSpacePtr = std::shared_ptr<const TraceSpace>;

/// Nodal coefficients of a function in V_h (one value per mesh vertex).
struct FeFunction {
  MeshPtr mesh;
  std::vector<double> values;

  FeFunction() = default;
  FeFunction(MeshPtr m, std::vector<double> v);
  static FeFunction zeros(MeshPtr m);
};

/// Nodal coefficients of a function in the trace space.
struct TraceFunction {
  TraceSpacePtr space;
  std::vector<double> values;

  TraceFunction() = default;
  TraceFunction(TraceSpacePtr s, std::vector<double> v);
  static TraceFunction zeros(TraceSpacePtr s);
};

// -- element geometry ----------------------------------------------------------

/// Gradients of the three barycentric coordinates of triangle `t`.
std::array<Point, 3> basis_gradients(const Mesh& mesh, TriangleId t);
/// Gradient of a P1 function restricted to triangle `t`.
Point gradient(const Mesh& mesh, TriangleId t, std::span<const double> values);
Point to_cartesian(const std::array<Point, 3>& corners, const std::array<double, 3>& bary);

// -- assembly ------------------------------------------------------------------

/// alpha * K with K the P1 stiffness matrix.
SparseOperator assemble_stiffness(const Mesh& mesh, double alpha);
/// Exact P1 boundary mass matrix over faces carrying `tag` (n x n).
SparseOperator assemble_boundary_mass(const Mesh& mesh, BoundaryTag tag);
/// A = alpha K + gamma M_a. Throws if the mesh has no Gamma_a face.
SparseOperator assemble_bilinear(const Mesh& mesh, const CoefficientSet& coeffs);
/// F_i = (f, phi_i) + (gamma u_a, phi_i)_{Gamma_a}.
std::vector<double> assemble_load(const Mesh& mesh, const ScalarField& f, const ScalarField& u_a,
                                  const CoefficientSet& coeffs);
/// b_i = (g, phi_i)_{faces with tag} by `gauss_points`-point Gauss rule (2 or 3).
std::vector<double> assemble_boundary_load(const Mesh& mesh, BoundaryTag tag, const ScalarField& g,
                                           int gauss_points = 2);

struct TraceOperators {
  SparseOperator mass_i;    // m x m, (psi_j, psi_k)_{Gamma_i}
  SparseOperator coupling;  // n x m, (psi_j, phi_i)_{Gamma_i}
  SparseOperator mass_a;    // n x n, (phi_j, phi_i)_{Gamma_a}
};

TraceOperators assemble_trace_operators(const TraceSpace& space);

// -- functions -----------------------------------------------------------------

FeFunction interpolate(const ScalarField& field, const MeshPtr& mesh);
TraceFunction interpolate_trace(const ScalarField& field, const TraceSpacePtr& space);
TraceFunction restrict_to_trace(const FeFunction& u, const TraceSpacePtr& space);
/// Extension by zero at the non-Gamma_i vertices.
FeFunction extend_trace(const TraceFunction& q);

/// Exact prolongation onto a mesh obtained from u.mesh by bisection.
FeFunction transfer(const FeFunction& u, const MeshPtr& fine);
TraceFunction transfer_trace(const TraceFunction& q, const TraceSpacePtr& fine_space);

struct FunctionNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  double l2_gamma_a = 0.0;
  double l2_gamma_i = 0.0;
};

/// Exact norms of a P1 function.
FunctionNorms norms(const FeFunction& u);
/// L2(Gamma_i) norm of a trace function.
double l2_norm(const TraceFunction& q);

/// Point location over a fixed mesh using a uniform bucket grid.
class PointLocator {
 public:
  explicit PointLocator(MeshPtr mesh);

  struct Hit {
    TriangleId triangle;
    std::array<double, 3> bary;
  };

  /// Triangle containing `p` (closed), or nullopt when outside the mesh.
  std::optional<Hit> locate(Point p) const;
  double evaluate(const FeFunction& u, Point p) const;

 private:
  MeshPtr mesh_;
  Point lo_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<TriangleId>> buckets_;
};

/// P1 function wrapped as a callable through point location.
ScalarField as_field(const FeFunction& u);

}  // namespace fluxrec
