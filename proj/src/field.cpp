#include "magsteady/field.hpp"

#include "magsteady/maxwell.hpp"

#include <cmath>

namespace magsteady {

void SolverParams::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("params: lambda must be positive");
  if (gamma < 0.0) throw ConfigError("params: gamma must be non-negative");
  if (!(linear_tol > 0.0) || !(fixed_point_tol > 0.0) || !(eigen_tol > 0.0))
    throw ConfigError("params: tolerances must be positive");
  if (max_iters < 1) throw ConfigError("params: max_iters must be >= 1");
  if (!(relaxation > 0.0) || relaxation > 1.0)
    throw ConfigError("params: relaxation must be in (0, 1]");
}

AngleField make_angle_field(std::shared_ptr<const DomainMask> mask,
                            std::shared_ptr<const ReferenceAngle> ref,
                            int winding) {
  AngleField a;
  a.mask = std::move(mask);
  a.ref = std::move(ref);
  a.winding = winding;
  a.phi.assign(a.mask->n_cells(), 0.0);
  a.xi.assign(a.mask->n_cells(), 0.0);
  return a;
}

Vec3Field assemble_u(const AngleField& a) {
  const int64_t nc = a.n_cells();
  Vec3Field u;
  for (int d = 0; d < 3; ++d) u[d].resize(nc);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const double t = a.theta(c), x = a.xi[c];
    const double cx = std::cos(x), sx = std::sin(x);
    u[0][c] = cx * std::cos(t);
    u[1][c] = cx * std::sin(t);
    u[2][c] = sx;
  }
  return u;
}

FrameDerivatives frame_derivatives(const AngleField& a) {
  const int64_t nc = a.n_cells();
  FrameDerivatives f;
  for (int d = 0; d < 3; ++d) {
    f.u_theta[d].resize(nc);
    f.u_xi[d].resize(nc);
    f.u_thetatheta[d].resize(nc);
    f.u_thetaxi[d].resize(nc);
    f.u_xixi[d].resize(nc);
  }
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const double t = a.theta(c), x = a.xi[c];
    const double ct = std::cos(t), st = std::sin(t);
    const double cx = std::cos(x), sx = std::sin(x);
    f.u_theta[0][c] = -cx * st;
    f.u_theta[1][c] = cx * ct;
    f.u_theta[2][c] = 0.0;
    f.u_xi[0][c] = -sx * ct;
    f.u_xi[1][c] = -sx * st;
    f.u_xi[2][c] = cx;
    f.u_thetatheta[0][c] = -cx * ct;
    f.u_thetatheta[1][c] = -cx * st;
    f.u_thetatheta[2][c] = 0.0;
    f.u_thetaxi[0][c] = sx * st;
    f.u_thetaxi[1][c] = -sx * ct;
    f.u_thetaxi[2][c] = 0.0;
    f.u_xixi[0][c] = -cx * ct;
    f.u_xixi[1][c] = -cx * st;
    f.u_xixi[2][c] = -sx;
  }
  return f;
}

Vec3Field masked_gradient(
    const DomainMask& mask, const Field& f,
    const std::function<double(double, double, double)>& boundary_value) {
  const int64_t nc = mask.n_cells();
  const double h = mask.grid.h();
  Vec3Field g;
  for (int d = 0; d < 3; ++d) g[d].assign(nc, 0.0);

  // boundary values per cut link, gathered once (the closure may be costly)
  std::vector<double> bval(mask.cut_links.size());
  for (size_t q = 0; q < mask.cut_links.size(); ++q) {
    const CutLink& L = mask.cut_links[q];
    bval[q] = boundary_value ? boundary_value(L.px, L.py, L.pz) : 0.0;
  }
  // per cell/direction link -> cut index
  std::vector<std::array<int32_t, 6>> cut_of(nc, {-1, -1, -1, -1, -1, -1});
  for (size_t q = 0; q < mask.cut_links.size(); ++q)
    cut_of[mask.cut_links[q].cell][mask.cut_links[q].dir] =
        static_cast<int32_t>(q);

#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    for (int axis = 0; axis < 3; ++axis) {
      const int dp = 2 * axis, dm = 2 * axis + 1;
      const int32_t np = mask.neighbor[c][dp], nm = mask.neighbor[c][dm];
      // value and distance (in units of h) on each side
      const double fp = np >= 0 ? f[np] : bval[cut_of[c][dp]];
      const double ap = np >= 0 ? 1.0 : mask.link_alpha[c][dp];
      const double fm = nm >= 0 ? f[nm] : bval[cut_of[c][dm]];
      const double am = nm >= 0 ? 1.0 : mask.link_alpha[c][dm];
      // three-point nonuniform derivative at the center
      g[axis][c] = ((fp - f[c]) * (am / ap) + (f[c] - fm) * (ap / am)) /
                   ((ap + am) * h);
    }
  }
  return g;
}

Vec3Field theta_gradient(const AngleField& a, const BoundaryData& bdata) {
  const DomainMask& mask = *a.mask;
  Vec3Field g = masked_gradient(
      mask, a.phi,
      [&](double x, double y, double z) { return bdata.eval_g0(x, y, z); });
  const int64_t nc = mask.n_cells();
  if (a.winding != 0) {
    const double w = a.winding;
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < nc; ++c) {
      g[0][c] += w * a.ref->grad[c][0];
      g[1][c] += w * a.ref->grad[c][1];
      g[2][c] += w * a.ref->grad[c][2];
    }
  }
  return g;
}

EnergyBreakdown energy(const AngleField& a, const BoundaryData& bdata,
                       const DemagField* H, const SolverParams& p) {
  const DomainMask& mask = *a.mask;
  const int64_t nc = mask.n_cells();
  const double h3 = std::pow(mask.grid.h(), 3);

  const Vec3Field gxi = masked_gradient(mask, a.xi, nullptr);
  const Vec3Field gth = theta_gradient(a, bdata);

  EnergyBreakdown e;
  double ex_xi = 0.0, ex_th = 0.0, an = 0.0, dm = 0.0;
  for (int64_t c = 0; c < nc; ++c) {
    const double gx2 = gxi[0][c] * gxi[0][c] + gxi[1][c] * gxi[1][c] +
                       gxi[2][c] * gxi[2][c];
    const double gt2 = gth[0][c] * gth[0][c] + gth[1][c] * gth[1][c] +
                       gth[2][c] * gth[2][c];
    const double cx = std::cos(a.xi[c]), sx = std::sin(a.xi[c]);
    ex_xi += 0.5 * gx2;
    ex_th += 0.5 * cx * cx * gt2;
    an += p.lambda * sx * sx;
  }
  if (H != nullptr && !H->H_omega[0].empty()) {
    const Vec3Field u = assemble_u(a);
    for (int64_t c = 0; c < nc; ++c)
      dm -= 0.5 * (u[0][c] * H->H_omega[0][c] + u[1][c] * H->H_omega[1][c] +
                   u[2][c] * H->H_omega[2][c]);
  }
  e.exchange_xi = ex_xi * h3;
  e.exchange_theta = ex_th * h3;
  e.anisotropy = an * h3;
  e.demag = dm * h3;
  return e;
}

}  // namespace magsteady
