#pragma once

// Residual a-posteriori indicators for the state/costate/flux triplet.
//
// Element residuals: R_{T,1} = f + div(alpha grad u_h), R_{T,2} = -div(alpha grad p_h).
// Face residuals (n_F as stored on the face):
//   J_{F,1}: interior [alpha grad u_h . n_F]; Gamma_a gamma u_a - gamma u_h - alpha du_h/dn;
//            Gamma_i -q_h - alpha du_h/dn
//   J_{F,2}: interior [alpha grad p_h . n_F]; Gamma_a u_h - z - gamma p_h - alpha dp_h/dn;
//            Gamma_i -alpha dp_h/dn
// with eta_{T,k}^2 = h_T^2 ||R_{T,k}||_T^2 + sum_{F in dT} h_F ||J_{F,k}||_F^2.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "fluxrec/solver.hpp"

namespace fluxrec {

struct ElementIndicators {
  std::vector<double> eta1_sq;  // per triangle
  std::vector<double> eta2_sq;
  std::vector<double> eta_sq;
  std::vector<double> osc_f_sq;   // per triangle
  std::vector<double> osc_j1_sq;  // per face
  std::vector<double> osc_j2_sq;  // per face

  std::size_t size() const { return eta_sq.size(); }
  double eta() const;
  double eta1() const;
  double eta2() const;
  /// sqrt(osc_f^2 + osc_J1^2 + osc_J2^2) over the whole mesh.
  double oscillation() const;
};

/// Samples of a residual at the points of a quadrature rule, together with
/// the rule weights already scaled by the measure of the element.
struct ResidualSamples {
  std::vector<double> values;
  std::vector<double> weights;

  double norm_sq() const;
  double mean() const;
  /// ||v - mean(v)||^2 with the same rule.
  double deviation_sq() const;
};

struct ElementResiduals {
  std::vector<ResidualSamples> r1;
  std::vector<ResidualSamples> r2;
};

struct FaceJumps {
  std::vector<ResidualSamples> j1;
  std::vector<ResidualSamples> j2;
};

/// R_{T,1} and R_{T,2} at the degree-4 triangle rule points.
ElementResiduals element_residuals(const OptimalTriplet& triplet, const ScalarField& f);
/// J_{F,1}, J_{F,2} on every face: three Gauss points on Gamma_a faces, two elsewhere.
FaceJumps face_jumps(const OptimalTriplet& triplet, const ProblemData& data);

/// Indicators and oscillations. Each interior face contributes its full
/// h_F ||J||^2 to both neighbours.
ElementIndicators estimate(const OptimalTriplet& triplet, const ProblemData& data);

struct OscillationTerms {
  std::vector<double> osc_f_sq;
  std::vector<double> osc_j1_sq;
  std::vector<double> osc_j2_sq;
};

OscillationTerms oscillations(const OptimalTriplet& triplet, const ProblemData& data);

/// sqrt(sum of eta_sq over `subset`), all triangles when absent.
double global_estimator(const ElementIndicators& indicators,
                        const std::optional<std::span<const TriangleId>>& subset = std::nullopt);

}  // namespace fluxrec
