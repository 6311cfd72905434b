#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magsteady/maxwell.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace magsteady;

namespace {

Vec3Field random_m(const DomainMask& mask, uint64_t seed, bool unit = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  const int64_t n = mask.n_cells();
  Vec3Field m;
  for (int d = 0; d < 3; ++d) {
    m[d].resize(n);
    for (double& v : m[d]) v = N01(rng);
  }
  if (unit)
    for (int64_t c = 0; c < n; ++c) {
      const double nr = std::hypot(m[0][c], m[1][c], m[2][c]);
      for (int d = 0; d < 3; ++d) m[d][c] /= nr;
    }
  return m;
}

}  // namespace

TEST_CASE("zero magnetization gives the zero field") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.2, {1.0, 16}));
  Vec3Field m;
  for (int d = 0; d < 3; ++d) m[d].assign(mask->n_cells(), 0.0);
  DemagField H = solve_demag(m, mask);
  CHECK(H.field_energy == 0.0);
  for (int d = 0; d < 3; ++d)
    for (double v : H.H_omega[d]) CHECK(v == 0.0);
}

TEST_CASE("potential matches direct kernel summation on a small grid") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.22, {1.0, 16}));
  Vec3Field m = random_m(*mask, 5);
  DemagSolver solver(mask);
  DemagField out = solver.solve(m);

  // direct O(N^6)-style summation: charge, then kernel sum
  const GridSpec& g = mask->grid;
  const double h = g.h();
  const int64_t total = g.cell_count();
  const double self = 2.380077363979553;
  std::vector<double> vdir(total, 0.0);
  double mean = 0.0;
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double acc = 0.0;
        for (int64_t q = 0; q < total; ++q) {
          const double s = out.charge[q];
          if (s == 0.0) continue;
          const int qi = static_cast<int>(q % g.n);
          const int qj = static_cast<int>((q / g.n) % g.n);
          const int qk = static_cast<int>(q / (int64_t(g.n) * g.n));
          const double di = i - qi, dj = j - qj, dk = k - qk;
          const double rr = std::sqrt(di * di + dj * dj + dk * dk);
          acc += s * (rr == 0.0 ? self : 1.0 / rr);
        }
        vdir[g.lin(i, j, k)] = -acc * h * h / (4.0 * std::numbers::pi);
      }
  double vol = 0.0;
  for (int64_t c = 0; c < mask->n_cells(); ++c) {
    mean += vdir[mask->cells[c]];
    vol += 1.0;
  }
  mean /= vol;
  double worst = 0.0, scale = 0.0;
  for (int64_t q = 0; q < total; ++q) {
    worst = std::max(worst, std::fabs(vdir[q] - mean - out.v[q]));
    scale = std::max(scale, std::fabs(vdir[q] - mean));
  }
  CHECK(worst < 1e-11 * std::max(scale, 1e-30));
}

TEST_CASE("uniformly magnetized ball: interior mean field is -u/3") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.25, {1.0, 48}));
  const int64_t n = mask->n_cells();
  Vec3Field m;
  m[0].assign(n, 0.0);
  m[1].assign(n, 0.0);
  m[2].assign(n, 1.0);
  DemagSolver solver(mask);
  DemagCompact out = solver.solve_compact(m);
  // average over well-interior cells
  double hx = 0, hy = 0, hz = 0;
  int64_t cnt = 0;
  for (int64_t c = 0; c < n; ++c) {
    if (std::hypot(mask->cx(c), mask->cy(c), mask->cz(c)) > 0.2) continue;
    hx += out.H_omega[0][c];
    hy += out.H_omega[1][c];
    hz += out.H_omega[2][c];
    ++cnt;
  }
  hx /= cnt;
  hy /= cnt;
  hz /= cnt;
  CHECK(hz == doctest::Approx(-1.0 / 3.0).epsilon(0.05));
  CHECK(std::fabs(hx) < 0.01);
  CHECK(std::fabs(hy) < 0.01);
}

TEST_CASE("energy identity and the L2 bound on random fields") {
  auto mask = std::make_shared<const DomainMask>(
      build_torus_mask(0.3, 0.1, {1.0, 24}));
  DemagSolver solver(mask);
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Vec3Field m = random_m(*mask, seed, /*unit=*/true);
    DemagCompact out = solver.solve_compact(m);
    const double rhs = demag_pairing(*mask, m, out.H_omega);
    CHECK(out.field_energy ==
          doctest::Approx(rhs).epsilon(1e-6));  // identity
    CHECK(out.field_energy >= 0.0);
    // |grad v| bound with positive margin for unit-length magnetization
    CHECK(std::sqrt(out.field_energy) < std::sqrt(mask->volume));
  }
}

TEST_CASE("operator is linear to machine precision") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.2, {1.0, 16}));
  DemagSolver solver(mask);
  Vec3Field a = random_m(*mask, 31), b = random_m(*mask, 32);
  const double al = 1.7, be = -0.4;
  Vec3Field combo;
  const int64_t n = mask->n_cells();
  for (int d = 0; d < 3; ++d) {
    combo[d].resize(n);
    for (int64_t c = 0; c < n; ++c)
      combo[d][c] = al * a[d][c] + be * b[d][c];
  }
  DemagCompact Ha = solver.solve_compact(a);
  DemagCompact Hb = solver.solve_compact(b);
  DemagCompact Hc = solver.solve_compact(combo);
  double worst = 0.0, scale = 1e-30;
  for (int d = 0; d < 3; ++d)
    for (int64_t c = 0; c < n; ++c) {
      worst = std::max(worst, std::fabs(al * Ha.H_omega[d][c] +
                                        be * Hb.H_omega[d][c] -
                                        Hc.H_omega[d][c]));
      scale = std::max(scale, std::fabs(Hc.H_omega[d][c]));
    }
  CHECK(worst < 1e-12 * scale);
}

TEST_CASE("scalar application is self-adjoint and negative") {
  auto mask = std::make_shared<const DomainMask>(
      build_torus_mask(0.3, 0.1, {1.0, 16}));
  DemagSolver solver(mask);
  const int64_t n = mask->n_cells();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> N01(0.0, 1.0);
  Field w(n), z(n);
  for (double& v : w) v = N01(rng);
  for (double& v : z) v = N01(rng);
  Vec3Field e1 = random_m(*mask, 78, true), e2 = random_m(*mask, 79, true);

  DemagCompact Hw, Hz;
  solver.solve_scalar_compact(w, e1, Hw);
  solver.solve_scalar_compact(z, e2, Hz);
  double lhs = 0.0, rhs = 0.0;
  for (int64_t c = 0; c < n; ++c) {
    const double e2Hw = e2[0][c] * Hw.H_omega[0][c] +
                        e2[1][c] * Hw.H_omega[1][c] +
                        e2[2][c] * Hw.H_omega[2][c];
    const double e1Hz = e1[0][c] * Hz.H_omega[0][c] +
                        e1[1][c] * Hz.H_omega[1][c] +
                        e1[2][c] * Hz.H_omega[2][c];
    lhs += e2Hw * z[c];
    rhs += e1Hz * w[c];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));

  // quadratic form equals minus the field energy and is nonpositive
  DemagCompact Hww;
  solver.solve_scalar_compact(w, e1, Hww);
  Vec3Field we1;
  for (int d = 0; d < 3; ++d) {
    we1[d].resize(n);
    for (int64_t c = 0; c < n; ++c) we1[d][c] = w[c] * e1[d][c];
  }
  const double quad = -demag_pairing(*mask, we1, Hww.H_omega);  // int m.H
  CHECK(quad == doctest::Approx(-Hww.field_energy).epsilon(1e-9));
  CHECK(quad <= 0.0);
  CHECK(solver.spectrum_max() <= 1e-12);
}

TEST_CASE("trivial scalar application returns zero") {
  auto mask =
      std::make_shared<const DomainMask>(build_ball_mask(0.2, {1.0, 16}));
  Field w(mask->n_cells(), 0.0);
  Vec3Field e = random_m(*mask, 99, true);
  DemagField H = apply_L_scalar(w, e, mask);
  CHECK(H.field_energy == 0.0);
  for (double v : H.v_omega) CHECK(v == 0.0);
}

TEST_CASE("interior field is insensitive to extra padding") {
  // the convolution is aperiodic by construction; enlarging the box (hence
  // the padded transform) must leave the interior field unchanged
  auto m32 = std::make_shared<const DomainMask>(
      build_torus_mask(0.3, 0.1, {1.0, 32}));
  auto m32big = std::make_shared<const DomainMask>(
      build_torus_mask(0.3, 0.1, {2.0, 64}));
  Vec3Field a = random_m(*m32, 41, true);
  // same cells exist in the enlarged grid (offset by 16 per axis)
  Vec3Field b;
  const int64_t n2 = m32big->n_cells();
  for (int d = 0; d < 3; ++d) b[d].assign(n2, 0.0);
  for (int64_t c2 = 0; c2 < n2; ++c2) {
    const auto [i, j, k] = m32big->cell_ijk[c2];
    const int64_t g = m32->grid.lin(i - 16, j - 16, k - 16);
    const int32_t c1 = m32->cell_index[g];
    REQUIRE(c1 >= 0);
    for (int d = 0; d < 3; ++d) b[d][c2] = a[d][c1];
  }
  DemagSolver s1(m32), s2(m32big);
  DemagCompact H1 = s1.solve_compact(a);
  DemagCompact H2 = s2.solve_compact(b);
  double worst = 0.0;
  for (int64_t c2 = 0; c2 < n2; ++c2) {
    const auto [i, j, k] = m32big->cell_ijk[c2];
    const int32_t c1 = m32->cell_index[m32->grid.lin(i - 16, j - 16, k - 16)];
    for (int d = 0; d < 3; ++d)
      worst = std::max(worst,
                       std::fabs(H1.H_omega[d][c1] - H2.H_omega[d][c2]));
  }
  CHECK(worst < 1e-2 * 0.33);  // well under 1% of the field scale
}
