// field.hpp — spherical-chart magnetization algebra on a masked grid.
//
// The longitude is stored split as theta = winding*theta_ref + phi with phi
// single-valued, so every PDE unknown is single-valued while the homotopy
// class is pinned exactly by the integer winding.
#pragma once

#include "magsteady/domain.hpp"

#include <array>
#include <memory>
#include <vector>

namespace magsteady {

using Field = std::vector<double>;
using Vec3Field = std::array<std::vector<double>, 3>;

struct SolverParams {
  double lambda = 50.0;      // anisotropy strength, > 0
  double gamma = 0.0;        // precession constant, >= 0
  double linear_tol = 1e-12;
  double fixed_point_tol = 1e-10;
  int max_iters = 200;
  double relaxation = 1.0;   // outer damping in (0, 1]
  double lambda_min = 50.0;
  double eigen_tol = 1e-6;
  uint64_t seed = 1234;

  void validate() const;
};

// Chart guard: solvers abort once |xi| reaches pi/2 - 0.1 instead of
// switching charts.
constexpr double kChartGuard = 1.4707963267948966;  // pi/2 - 0.1

struct AngleField {
  std::shared_ptr<const DomainMask> mask;
  std::shared_ptr<const ReferenceAngle> ref;
  Field phi;   // single-valued longitude correction
  Field xi;    // latitude
  int winding = 0;

  double theta(int32_t c) const { return winding * ref->value[c] + phi[c]; }
  int64_t n_cells() const { return mask->n_cells(); }
};

AngleField make_angle_field(std::shared_ptr<const DomainMask> mask,
                            std::shared_ptr<const ReferenceAngle> ref,
                            int winding);

// u = (cos xi cos theta, cos xi sin theta, sin xi), |u| = 1 per cell.
Vec3Field assemble_u(const AngleField& a);

struct FrameDerivatives {
  Vec3Field u_theta, u_xi, u_thetatheta, u_thetaxi, u_xixi;
};
FrameDerivatives frame_derivatives(const AngleField& a);

// Per-cell gradient of a single-valued field with Dirichlet boundary values
// taken at the cut-link interface points: centered where both neighbors are
// inside, one-sided against the interface otherwise.
Vec3Field masked_gradient(const DomainMask& mask, const Field& f,
                          const std::function<double(double, double, double)>&
                              boundary_value);

// Gradient of theta = winding*theta_ref + phi: analytic reference part plus
// the discrete gradient of phi (phi boundary trace from bdata.eval_g0).
Vec3Field theta_gradient(const AngleField& a, const BoundaryData& bdata);

struct EnergyBreakdown {
  double exchange_xi = 0.0;   // 1/2 |grad xi|^2
  double exchange_theta = 0.0;// cos^2(xi)/2 |grad theta|^2
  double demag = 0.0;         // -1/2 u . H
  double anisotropy = 0.0;    // lambda sin^2 xi
  double total() const {
    return exchange_xi + exchange_theta + demag + anisotropy;
  }
};

struct DemagField;  // maxwell.hpp

// Discrete Landau-Lifshitz energy; H may be null to exclude the demag term.
EnergyBreakdown energy(const AngleField& a, const BoundaryData& bdata,
                       const DemagField* H, const SolverParams& p);

}  // namespace magsteady
