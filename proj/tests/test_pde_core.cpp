#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magsteady/kernels.hpp"
#include "magsteady/pde_core.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace magsteady;

namespace {

Field random_field(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  Field f(n);
  for (double& v : f) v = N01(rng);
  return f;
}

}  // namespace

TEST_CASE("laplacian annihilates affine fields away from cut cells") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 32});
  DiscreteOperator A = laplacian_dirichlet(mask);
  const int64_t n = mask.n_cells();
  Field f(n), y(n);
  for (int64_t c = 0; c < n; ++c)
    f[c] = 1.0 + 2.0 * mask.cx(c) - 0.5 * mask.cy(c) + 3.0 * mask.cz(c);
  A.apply(f, y);
  for (int64_t c = 0; c < n; ++c) {
    bool interior = true;
    for (int d = 0; d < 6; ++d) interior &= mask.neighbor[c][d] >= 0;
    if (interior) CHECK(std::fabs(y[c]) < 1e-8);
  }
}

TEST_CASE("laplacian of x^2 is 2 in the interior") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 32});
  DiscreteOperator A = laplacian_dirichlet(mask);
  const int64_t n = mask.n_cells();
  Field f(n), y(n);
  for (int64_t c = 0; c < n; ++c) f[c] = mask.cx(c) * mask.cx(c);
  A.apply(f, y);
  for (int64_t c = 0; c < n; ++c) {
    bool interior = true;
    for (int d = 0; d < 6; ++d) interior &= mask.neighbor[c][d] >= 0;
    if (interior) CHECK(y[c] == doctest::Approx(2.0).epsilon(1e-6));
  }
}

TEST_CASE("manufactured solution is recovered at first order") {
  // w = product of the torus sdf with a smooth bump vanishes on the surface
  auto sdf = [](double x, double y, double z) {
    return std::hypot(std::hypot(x, y) - 0.3, z) - 0.1;
  };
  auto exact = [&](double x, double y, double z) {
    return sdf(x, y, z) * std::cos(3.0 * x + y) * std::cos(2.0 * z);
  };
  double err_prev = 0.0;
  for (int n : {24, 48}) {
    DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, n});
    const int64_t nc = mask.n_cells();
    // rhs = -lap(exact), by dense finite differences of the closed form
    const double d = 1e-5;
    Field rhs(nc);
    for (int64_t c = 0; c < nc; ++c) {
      const double x = mask.cx(c), y = mask.cy(c), z = mask.cz(c);
      const double lap =
          (exact(x + d, y, z) + exact(x - d, y, z) + exact(x, y + d, z) +
           exact(x, y - d, z) + exact(x, y, z + d) + exact(x, y, z - d) -
           6.0 * exact(x, y, z)) /
          (d * d);
      rhs[c] = -lap;
    }
    DiscreteOperator L = laplacian_dirichlet(mask);
    DiscreteOperator negL;
    negL.size = L.size;
    negL.symmetric_hint = true;
    negL.mask = L.mask;
    auto Lp = L.stencil;
    negL.action = [Lp](const double* x, double* y) {
      kernels::stencil_apply(*Lp, x, y);
      for (int64_t i = 0; i < Lp->size(); ++i) y[i] = -y[i];
    };
    Field w;
    SolveOpts so;
    so.tol = 1e-11;
    solve_linear(negL, rhs, w, so);
    double err = 0.0;
    for (int64_t c = 0; c < nc; ++c)
      err = std::max(err,
                     std::fabs(w[c] - exact(mask.cx(c), mask.cy(c), mask.cz(c))));
    if (n == 24) err_prev = err;
    if (n == 48) CHECK(err < 0.75 * err_prev);  // at least first order
    CHECK(err < 0.05);
  }
}

TEST_CASE("divform with unit coefficient equals the laplacian") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 24});
  const int64_t n = mask.n_cells();
  Field ones(n, 1.0), twos(n, 2.0);
  DiscreteOperator A1 = divform_operator(mask, ones);
  DiscreteOperator AL = laplacian_dirichlet(mask);
  DiscreteOperator A2 = divform_operator(mask, twos);
  Field x = random_field(n, 3), y1(n), y2(n), y3(n);
  A1.apply(x, y1);
  AL.apply(x, y2);
  A2.apply(x, y3);
  for (int64_t c = 0; c < n; ++c) {
    CHECK(y1[c] == y2[c]);
    CHECK(y3[c] == doctest::Approx(2.0 * y1[c]).epsilon(1e-14));
  }
}

TEST_CASE("divform is symmetric on random fields") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 24});
  const int64_t n = mask.n_cells();
  Field coef(n);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (double& v : coef) v = U(rng);
  DiscreteOperator A = divform_operator(mask, coef);
  for (int rep = 0; rep < 4; ++rep) {
    Field w = random_field(n, 100 + rep), z = random_field(n, 200 + rep);
    Field Aw(n), Az(n);
    A.apply(w, Aw);
    A.apply(z, Az);
    const double a = kernels::dot(Aw.data(), z.data(), n);
    const double b = kernels::dot(w.data(), Az.data(), n);
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
}

TEST_CASE("divform rejects nonpositive coefficients") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 16});
  Field coef(mask.n_cells(), 1.0);
  coef[3] = 0.0;
  CHECK_THROWS_AS(divform_operator(mask, coef), ChartError);
}

TEST_CASE("solve_linear: zero rhs, identity roundtrip, monotone iterations") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 24});
  const int64_t n = mask.n_cells();
  auto S = divform_stencil(mask, nullptr);

  auto shifted = [&](double lam) {
    DiscreteOperator A;
    A.size = n;
    A.symmetric_hint = true;
    A.mask = &mask;
    A.action = [S, lam, n](const double* x, double* y) {
      kernels::stencil_apply(*S, x, y);
      for (int64_t i = 0; i < n; ++i) y[i] = -y[i] + 2.0 * lam * x[i];
    };
    return A;
  };

  Field zero(n, 0.0), x;
  SolveInfo info = solve_linear(shifted(0.0), zero, x);
  CHECK(info.converged);
  for (double v : x) CHECK(v == 0.0);

  // A(solve(A, b)) = b up to tol
  Field b = random_field(n, 9), y(n);
  SolveOpts so;
  so.tol = 1e-10;
  solve_linear(shifted(0.0), b, x, so);
  shifted(0.0).apply(x, y);
  double num = 0, den = 0;
  for (int64_t i = 0; i < n; ++i) {
    num += (y[i] - b[i]) * (y[i] - b[i]);
    den += b[i] * b[i];
  }
  CHECK(std::sqrt(num / den) < 1e-9);

  // iteration count decreases as the shift grows
  int prev = 1 << 30;
  for (double lam : {0.0, 10.0, 100.0, 1000.0}) {
    Field xx;
    SolveInfo si = solve_linear(shifted(lam), b, xx, so);
    CHECK(si.iterations <= prev);
    prev = si.iterations;
  }

  // iteration cap reports the residual
  SolveOpts capped;
  capped.tol = 1e-14;
  capped.max_iters = 2;
  Field xx;
  CHECK_THROWS_AS(solve_linear(shifted(0.0), b, xx, capped), SolveError);
}

TEST_CASE("smallest eigenvalue of the Dirichlet cube matches 3 pi^2 / L^2") {
  const double L = 0.9375;  // 45 cells of the 48-cell unit box
  GridSpec g{1.0, 48};
  DomainMask mask = build_box_mask(L, g);
  DiscreteOperator A;
  auto S = divform_stencil(mask, nullptr);
  A.size = mask.n_cells();
  A.symmetric_hint = true;
  A.mask = &mask;
  A.action = [Sp = S, n = A.size](const double* x, double* y) {
    kernels::stencil_apply(*Sp, x, y);
    for (int64_t i = 0; i < n; ++i) y[i] = -y[i];
  };
  EigenOpts eo;
  eo.tol = 1e-8;
  eo.block = 5;
  auto pairs = smallest_eigenpairs(A, 1, eo);
  const double exact = 3.0 * std::numbers::pi * std::numbers::pi / (L * L);
  CHECK(pairs[0].value.real() == doctest::Approx(exact).epsilon(0.02));
  CHECK(std::fabs(pairs[0].value.imag()) <
        1e-8 * std::fabs(pairs[0].value.real()));
  CHECK(pairs[0].residual < 1e-6);

  // spectral shift moves the eigenvalue exactly
  const double lam = 321.0;
  DiscreteOperator Ash = A;
  Ash.action = [Sp = S, n = A.size, lam](const double* x, double* y) {
    kernels::stencil_apply(*Sp, x, y);
    for (int64_t i = 0; i < n; ++i) y[i] = -y[i] + 2.0 * lam * x[i];
  };
  EigenOpts eo2;
  eo2.tol = 1e-8;
  eo2.block = 5;
  eo2.shift = 2.0 * lam;
  auto pairs2 = smallest_eigenpairs(Ash, 1, eo2);
  CHECK(pairs2[0].value.real() ==
        doctest::Approx(pairs[0].value.real() + 2.0 * lam).epsilon(1e-6));
}

TEST_CASE("smooth random fields are normalized and boundary-flat") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 24});
  std::mt19937_64 rng(2024);
  Field f = smooth_random_field(mask, rng);
  CHECK(mask.nrm_omega(f) == doctest::Approx(1.0).epsilon(1e-8));
  // smoothness: neighbor increments well below the field scale
  double worst = 0.0;
  for (int64_t c = 0; c < mask.n_cells(); ++c)
    for (int d = 0; d < 6; ++d)
      if (mask.neighbor[c][d] >= 0)
        worst = std::max(worst, std::fabs(f[c] - f[mask.neighbor[c][d]]));
  const double scale = kernels::max_abs(f.data(), mask.n_cells());
  CHECK(worst < 0.35 * scale);
}
