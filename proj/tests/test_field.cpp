#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magsteady/field.hpp"
#include "magsteady/maxwell.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace magsteady;

namespace {

struct Fixture {
  std::shared_ptr<const DomainMask> mask;
  std::shared_ptr<const ReferenceAngle> ref;
  BoundaryData bd;
  Fixture(int n = 24, int winding = 1, double perturb = 0.0) {
    mask = std::make_shared<const DomainMask>(
        build_torus_mask(0.3, 0.1, {1.0, n}));
    ref = std::make_shared<const ReferenceAngle>(reference_angle(*mask));
    bd = make_boundary_data(*mask, winding, perturb);
  }
  AngleField angles() const { return make_angle_field(mask, ref, bd.winding); }
};

}  // namespace

TEST_CASE("assemble_u is unit length and hits the chart poles") {
  Fixture fx;
  AngleField a = fx.angles();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    a.phi[c] = 2.0 * U(rng);
    a.xi[c] = 1.4 * U(rng);
  }
  Vec3Field u = assemble_u(a);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    const double nrm = std::hypot(u[0][c], u[1][c], u[2][c]);
    CHECK(nrm == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(u[2][c] == doctest::Approx(std::sin(a.xi[c])).epsilon(1e-14));
  }

  // axis-aligned spot values
  AngleField b = fx.angles();
  b.winding = 0;
  std::fill(b.phi.begin(), b.phi.end(), 0.0);
  Vec3Field u0 = assemble_u(b);
  CHECK(u0[0][0] == doctest::Approx(1.0));
  CHECK(u0[1][0] == doctest::Approx(0.0));
  std::fill(b.phi.begin(), b.phi.end(), std::numbers::pi / 2);
  u0 = assemble_u(b);
  CHECK(u0[0][0] == doctest::Approx(0.0));
  CHECK(u0[1][0] == doctest::Approx(1.0));
  std::fill(b.xi.begin(), b.xi.end(), std::numbers::pi / 2);
  std::mt19937_64 rng2(8);
  for (double& v : b.phi) v = 3.0 * U(rng2);
  u0 = assemble_u(b);
  for (int64_t c = 0; c < b.n_cells(); ++c) {
    CHECK(u0[2][c] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::fabs(u0[0][c]) < 1e-14);
  }
}

TEST_CASE("frame derivatives: orthogonality, symmetry, second derivatives") {
  Fixture fx;
  AngleField a = fx.angles();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    a.phi[c] = 2.0 * U(rng);
    a.xi[c] = 1.3 * U(rng);
  }
  Vec3Field u = assemble_u(a);
  FrameDerivatives fr = frame_derivatives(a);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    double uth_u = 0, uxi_u = 0;
    for (int d = 0; d < 3; ++d) {
      uth_u += fr.u_theta[d][c] * u[d][c];
      uxi_u += fr.u_xi[d][c] * u[d][c];
    }
    CHECK(std::fabs(uth_u) < 1e-14);
    CHECK(std::fabs(uxi_u) < 1e-14);
    // u_xixi = -u
    for (int d = 0; d < 3; ++d)
      CHECK(fr.u_xixi[d][c] == doctest::Approx(-u[d][c]).epsilon(1e-14));
  }

  // mixed second derivative via finite differences of u_theta in xi
  const double dxi = 1e-5;
  AngleField ap = a, am = a;
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    ap.xi[c] += dxi;
    am.xi[c] -= dxi;
  }
  FrameDerivatives frp = frame_derivatives(ap), frm = frame_derivatives(am);
  for (int64_t c = 0; c < a.n_cells(); c += 97)
    for (int d = 0; d < 3; ++d) {
      const double fd =
          (frp.u_theta[d][c] - frm.u_theta[d][c]) / (2.0 * dxi);
      CHECK(fr.u_thetaxi[d][c] == doctest::Approx(fd).epsilon(1e-6));
    }

  // at xi = 0 the mixed derivative vanishes
  AngleField flat = fx.angles();
  FrameDerivatives fr0 = frame_derivatives(flat);
  for (int64_t c = 0; c < flat.n_cells(); c += 53)
    for (int d = 0; d < 3; ++d) CHECK(std::fabs(fr0.u_thetaxi[d][c]) < 1e-15);
}

TEST_CASE("finite differences of assemble_u match u_theta") {
  Fixture fx;
  AngleField a = fx.angles();
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    a.phi[c] = U(rng);
    a.xi[c] = U(rng);
  }
  FrameDerivatives fr = frame_derivatives(a);
  const double dt = 1e-6;
  AngleField ap = a, am = a;
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    ap.phi[c] += dt;
    am.phi[c] -= dt;
  }
  Vec3Field up = assemble_u(ap), um = assemble_u(am);
  for (int64_t c = 0; c < a.n_cells(); c += 71)
    for (int d = 0; d < 3; ++d) {
      const double fd = (up[d][c] - um[d][c]) / (2.0 * dt);
      CHECK(fr.u_theta[d][c] == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("energy vanishes for a constant in-plane state") {
  Fixture fx(24, 0, 0.0);
  AngleField a = fx.angles();
  SolverParams p;
  EnergyBreakdown e = energy(a, fx.bd, nullptr, p);
  CHECK(std::fabs(e.exchange_theta) < 1e-18);
  CHECK(std::fabs(e.exchange_xi) < 1e-18);
  CHECK(e.anisotropy == 0.0);
  CHECK(e.total() == doctest::Approx(0.0));
}

TEST_CASE("reference-winding exchange energy matches the analytic integral") {
  Fixture fx(48, 1, 0.0);
  AngleField a = fx.angles();
  SolverParams p;
  EnergyBreakdown e = energy(a, fx.bd, nullptr, p);
  // integral over the torus of |grad theta_ref|^2 = 4 pi^2 (R - sqrt(R^2-r^2))
  const double exact = 0.5 * 4.0 * std::numbers::pi * std::numbers::pi *
                       (0.3 - std::sqrt(0.3 * 0.3 - 0.1 * 0.1));
  CHECK(e.exchange_theta == doctest::Approx(exact).epsilon(0.05));
  CHECK(e.exchange_xi == doctest::Approx(0.0));
}

TEST_CASE("energy is invariant under the 2 pi gauge shift") {
  Fixture fx(16, 1, 0.2);
  AngleField a = fx.angles();
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    a.phi[c] = U(rng);
    a.xi[c] = U(rng);
  }
  SolverParams p;
  const double e0 = energy(a, fx.bd, nullptr, p).total();
  for (double& v : a.phi) v += 2.0 * std::numbers::pi;
  const double e1 = energy(a, fx.bd, nullptr, p).total();
  CHECK(e0 == doctest::Approx(e1).epsilon(1e-13));
}

TEST_CASE("anisotropy term is nonnegative and zero only at xi = 0") {
  Fixture fx(16, 0, 0.0);
  AngleField a = fx.angles();
  SolverParams p;
  p.lambda = 77.0;
  CHECK(energy(a, fx.bd, nullptr, p).anisotropy == 0.0);
  a.xi[10] = 0.3;
  CHECK(energy(a, fx.bd, nullptr, p).anisotropy > 0.0);
}

TEST_CASE("uniform ball state reproduces the demag energy |Omega|/6") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.25, {1.0, 48}));
  const int64_t n = mask->n_cells();
  Vec3Field m;
  m[0].assign(n, 0.0);
  m[1].assign(n, 0.0);
  m[2].assign(n, 1.0);
  DemagSolver solver(mask);
  DemagField H = solver.solve(m);
  const double pairing = demag_pairing(*mask, m, H.H_omega);  // -int u.H
  // energy contribution -1/2 int u.H = |Omega|/6 for the uniform ball
  CHECK(0.5 * pairing == doctest::Approx(mask->volume / 6.0).epsilon(0.05));
}
