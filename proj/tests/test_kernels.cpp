#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "magsteady/kernels.hpp"

#include <omp.h>

#include <random>

using namespace magsteady;

namespace {

std::vector<double> random_vec(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = N01(rng);
  return v;
}

StencilOp random_stencil(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int32_t> pick(0, static_cast<int32_t>(n - 1));
  std::normal_distribution<double> N01(0.0, 1.0);
  StencilOp S;
  S.diag.resize(n);
  S.off.resize(n);
  S.nbr.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    S.diag[i] = N01(rng);
    for (int d = 0; d < 6; ++d) {
      if (d % 2 == 0) {
        S.nbr[i][d] = pick(rng);
        S.off[i][d] = N01(rng);
      } else {
        S.nbr[i][d] = -1;
        S.off[i][d] = 0.0;
      }
    }
  }
  return S;
}

}  // namespace

TEST_CASE("parallel maps agree bitwise with the serial reference") {
  const int64_t n = 10007;
  auto x = random_vec(n, 1);
  auto y1 = random_vec(n, 2);
  auto y2 = y1;
  kernels::axpy(0.37, x.data(), y1.data(), n);
  kernels::serial::axpy(0.37, x.data(), y2.data(), n);
  for (int64_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);

  auto z1 = random_vec(n, 3);
  auto z2 = z1;
  kernels::xpay(x.data(), -1.25, z1.data(), n);
  kernels::serial::xpay(x.data(), -1.25, z2.data(), n);
  for (int64_t i = 0; i < n; ++i) CHECK(z1[i] == z2[i]);
}

TEST_CASE("stencil apply agrees bitwise with the serial reference") {
  const int64_t n = 4096;
  StencilOp S = random_stencil(n, 11);
  auto x = random_vec(n, 12);
  std::vector<double> y1(n), y2(n);
  kernels::stencil_apply(S, x.data(), y1.data());
  kernels::serial::stencil_apply(S, x.data(), y2.data());
  for (int64_t i = 0; i < n; ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("reductions match the serial reference to rounding") {
  const int64_t n = 100003;
  auto x = random_vec(n, 21);
  auto y = random_vec(n, 22);
  const double dp = kernels::dot(x.data(), y.data(), n);
  const double ds = kernels::serial::dot(x.data(), y.data(), n);
  CHECK(dp == doctest::Approx(ds).epsilon(1e-13));
  CHECK(kernels::max_abs(x.data(), n) == kernels::serial::max_abs(x.data(), n));
  CHECK(kernels::nrm2(x.data(), n) ==
        doctest::Approx(kernels::serial::nrm2(x.data(), n)).epsilon(1e-13));
}

TEST_CASE("chunked reduction is independent of the thread count") {
  const int64_t n = 65537;
  auto x = random_vec(n, 31);
  auto y = random_vec(n, 32);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double d1 = kernels::dot(x.data(), y.data(), n);
  omp_set_num_threads(saved);
  const double d2 = kernels::dot(x.data(), y.data(), n);
  CHECK(d1 == d2);  // bitwise
}

TEST_CASE("spectral scale matches serial") {
  const int64_t nc = 5000;
  auto z1 = random_vec(2 * nc, 41);
  auto z2 = z1;
  auto s = random_vec(nc, 42);
  kernels::spectral_scale(s.data(), z1.data(), nc);
  kernels::serial::spectral_scale(s.data(), z2.data(), nc);
  for (int64_t i = 0; i < 2 * nc; ++i) CHECK(z1[i] == z2[i]);
}
