// bench_kernels — timings of the OpenMP kernels against their serial
// reference on the reference torus stencil and on flat arrays.
#include "magsteady/domain.hpp"
#include "magsteady/kernels.hpp"
#include "magsteady/pde_core.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

using namespace magsteady;

namespace {

// best-of-k wall time in microseconds
template <class F>
double best_us(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = omp_get_wtime();
    f();
    best = std::min(best, (omp_get_wtime() - t0) * 1e6);
  }
  return best;
}

void row(const char* name, double serial_us, double parallel_us) {
  std::printf("%-24s %12.1f %12.1f %8.2fx\n", name, serial_us, parallel_us,
              serial_us / std::max(parallel_us, 1e-9));
}

}  // namespace

int main(int argc, char** argv) {
  const bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  const int n_grid = quick ? 24 : 64;
  const int64_t n_flat = quick ? 1 << 16 : 1 << 22;
  const int reps = quick ? 3 : 20;

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-24s %12s %12s %8s\n", "kernel", "serial[us]", "omp[us]",
              "speedup");

  std::mt19937_64 rng(42);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::vector<double> x(n_flat), y(n_flat), z(n_flat);
  for (int64_t i = 0; i < n_flat; ++i) {
    x[i] = N01(rng);
    y[i] = N01(rng);
  }

  row("dot",
      best_us(reps, [&] { volatile double s = kernels::serial::dot(x.data(), y.data(), n_flat); (void)s; }),
      best_us(reps, [&] { volatile double s = kernels::dot(x.data(), y.data(), n_flat); (void)s; }));
  row("axpy",
      best_us(reps, [&] { kernels::serial::axpy(1.0000001, x.data(), z.data(), n_flat); }),
      best_us(reps, [&] { kernels::axpy(1.0000001, x.data(), z.data(), n_flat); }));
  row("max_abs",
      best_us(reps, [&] { volatile double s = kernels::serial::max_abs(x.data(), n_flat); (void)s; }),
      best_us(reps, [&] { volatile double s = kernels::max_abs(x.data(), n_flat); (void)s; }));

  DomainMask mask = build_torus_mask(0.3, 0.1, {1.0, n_grid});
  auto S = divform_stencil(mask, nullptr);
  const int64_t nc = mask.n_cells();
  std::vector<double> f(nc), g(nc);
  for (int64_t i = 0; i < nc; ++i) f[i] = N01(rng);
  std::printf("(stencil on %lld torus cells)\n", static_cast<long long>(nc));
  row("stencil_apply",
      best_us(reps, [&] { kernels::serial::stencil_apply(*S, f.data(), g.data()); }),
      best_us(reps, [&] { kernels::stencil_apply(*S, f.data(), g.data()); }));

  const int64_t ncplx = n_flat / 2;
  std::vector<double> spec(ncplx);
  for (int64_t i = 0; i < ncplx; ++i) spec[i] = N01(rng);
  row("spectral_scale",
      best_us(reps, [&] { kernels::serial::spectral_scale(spec.data(), x.data(), ncplx); }),
      best_us(reps, [&] { kernels::spectral_scale(spec.data(), x.data(), ncplx); }));

  // correctness spot check while we are at it
  std::vector<double> g2(nc);
  kernels::serial::stencil_apply(*S, f.data(), g2.data());
  kernels::stencil_apply(*S, f.data(), g.data());
  for (int64_t i = 0; i < nc; ++i)
    if (g[i] != g2[i]) {
      std::printf("MISMATCH at %lld\n", static_cast<long long>(i));
      return 1;
    }
  std::printf("serial/omp agreement: ok\n");
  return 0;
}
