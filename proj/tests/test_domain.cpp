#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magsteady/domain.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

using namespace magsteady;

namespace {
constexpr double kTorusR = 0.3, kTorusr = 0.1;

DomainMask torus48() { return build_torus_mask(kTorusR, kTorusr, {1.0, 48}); }
}  // namespace

TEST_CASE("torus volume approaches 2 pi^2 R r^2") {
  const double exact = 2.0 * std::numbers::pi * std::numbers::pi * kTorusR *
                       kTorusr * kTorusr;
  DomainMask m48 = torus48();
  CHECK(m48.volume == doctest::Approx(exact).epsilon(0.10));

  // refinement self-consistency: N=96 error bounded by the N=48 deviation
  DomainMask m96 = build_torus_mask(kTorusR, kTorusr, {1.0, 96});
  const double e48 = std::fabs(m48.volume - exact);
  const double e96 = std::fabs(m96.volume - exact);
  CHECK(e96 < e48 + 1e-12);
  CHECK(std::fabs(m96.volume - m48.volume) < e48 + e96 + 1e-12);
}

TEST_CASE("degenerate torus geometry is rejected") {
  CHECK_THROWS_AS(build_torus_mask(0.1, 0.1, {1.0, 48}), ConfigError);
  CHECK_THROWS_AS(build_torus_mask(0.1, 0.2, {1.0, 48}), ConfigError);
  CHECK_THROWS_AS(build_torus_mask(0.45, 0.1, {1.0, 48}), ConfigError);
  CHECK_THROWS_AS(build_torus_mask(0.3, 0.1, {1.0, 4}), ConfigError);
}

TEST_CASE("mask connectivity metadata is coherent") {
  DomainMask m = torus48();
  CHECK(m.n_cells() > 0);
  CHECK(m.boundary_cells.size() > 0);
  CHECK(m.cut_links.size() >= m.boundary_cells.size());
  for (const CutLink& L : m.cut_links) {
    CHECK(L.alpha > 0.0);
    CHECK(L.alpha <= 1.0);
    // interface point sits on the torus surface
    const double sd = std::hypot(std::hypot(L.px, L.py) - kTorusR, L.pz) -
                      kTorusr;
    CHECK(std::fabs(sd) < 1e-9);
  }
  for (const BoundaryCell& b : m.boundary_cells) {
    CHECK(b.sdist < 0.0);
    CHECK(std::hypot(b.nx, b.ny, b.nz) == doctest::Approx(1.0));
  }
}

TEST_CASE("ball mask is simply connected and rejects the handle check") {
  GridSpec g{1.0, 32};
  DomainMask ball = build_ball_mask(0.25, g);
  CHECK(ball.volume ==
        doctest::Approx(4.0 / 3.0 * std::numbers::pi * 0.25 * 0.25 * 0.25)
            .epsilon(0.08));
  auto sdf = [](double x, double y, double z) {
    return std::hypot(x, y, z) - 0.25;
  };
  CHECK_THROWS_AS(build_mask_from_sdf(g, sdf, /*require_handle=*/true),
                  GeometryError);
}

TEST_CASE("reference angle has winding 1 along the core loop") {
  DomainMask mask = torus48();
  ReferenceAngle ref = reference_angle(mask);
  auto loop = core_loop(mask, kTorusR);
  CHECK(loop.size() >= 4);
  CHECK(winding_number(ref.value, loop) == 1);

  // value spot check at theta = 0 ray
  for (int64_t c = 0; c < mask.n_cells(); ++c)
    if (std::fabs(mask.cy(c)) < 1e-12 && mask.cx(c) > 0)
      CHECK(ref.value[c] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reference angle rejects domains crossing the axis") {
  DomainMask ball = build_ball_mask(0.25, {1.0, 32});
  CHECK_THROWS_AS(reference_angle(ball), GeometryError);
}

TEST_CASE("winding numbers: constant, reference, doubled, shifted") {
  DomainMask mask = torus48();
  ReferenceAngle ref = reference_angle(mask);
  auto loop = core_loop(mask, kTorusR);

  std::vector<double> constant(mask.n_cells(), 0.7);
  CHECK(winding_number(constant, loop) == 0);

  std::vector<double> twice(mask.n_cells());
  for (int64_t c = 0; c < mask.n_cells(); ++c) twice[c] = 2.0 * ref.value[c];
  CHECK(winding_number(twice, loop) == 2);

  // winding is invariant under adding a single-valued field
  std::vector<double> shifted(mask.n_cells());
  for (int64_t c = 0; c < mask.n_cells(); ++c)
    shifted[c] = ref.value[c] + 0.4 * std::sin(ref.value[c]) +
                 0.3 * mask.cz(c) / kTorusr;
  CHECK(winding_number(shifted, loop) == 1);

  // and under loop homotopy
  auto inner = core_loop(mask, kTorusR - 0.04);
  auto outer = core_loop(mask, kTorusR + 0.04);
  CHECK(winding_number(ref.value, inner) == 1);
  CHECK(winding_number(ref.value, outer) == 1);
}

TEST_CASE("winding rejects under-resolved fields") {
  DomainMask mask = torus48();
  ReferenceAngle ref = reference_angle(mask);
  auto loop = core_loop(mask, kTorusR);
  std::vector<double> wild(mask.n_cells());
  for (int64_t c = 0; c < mask.n_cells(); ++c) wild[c] = 60.0 * ref.value[c];
  CHECK_THROWS_AS(winding_number(wild, loop), ResolutionError);
}

TEST_CASE("boundary data winding along the boundary loop") {
  DomainMask mask = torus48();
  for (int w : {0, 1, 2}) {
    BoundaryData bd = make_boundary_data(mask, w, 0.25);
    auto loop = boundary_loop(mask);
    std::vector<double> vals(mask.n_cells(), 0.0);
    for (int32_t c : loop) {
      CHECK(mask.boundary_index[c] >= 0);
      vals[c] = bd.theta_g[mask.boundary_index[c]];
    }
    CHECK(winding_number(vals, loop) == w);
  }
}

TEST_CASE("mask export writes a parseable header") {
  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, 16});
  const std::string path = "mask_export_test.txt";
  export_mask(mask, path, 0.3, 0.1);
  std::FILE* f = std::fopen(path.c_str(), "r");
  REQUIRE(f != nullptr);
  int n = 0;
  double box = 0, R = 0, r = 0;
  CHECK(std::fscanf(f, "N %d box_side %lf R %lf r %lf", &n, &box, &R, &r) == 4);
  CHECK(n == 16);
  CHECK(R == doctest::Approx(0.3));
  std::fclose(f);
  std::remove(path.c_str());
}
