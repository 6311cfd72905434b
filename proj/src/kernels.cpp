#include "magsteady/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace magsteady::kernels {

// Chunked reduction: the range is split into FIXED_CHUNKS blocks regardless
// of thread count, each block is summed left-to-right, and block sums are
// combined in block order. Bitwise reproducible for any OMP_NUM_THREADS.
template <class F>
static double reduce_chunked(int64_t n, F&& block_sum) {
  if (n == 0) return 0.0;
  std::array<double, FIXED_CHUNKS> partial{};
  const int64_t chunk = (n + FIXED_CHUNKS - 1) / FIXED_CHUNKS;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < FIXED_CHUNKS; ++c) {
    const int64_t lo = c * chunk;
    const int64_t hi = std::min(n, lo + chunk);
    partial[c] = lo < hi ? block_sum(lo, hi) : 0.0;
  }
  double s = 0.0;
  for (int c = 0; c < FIXED_CHUNKS; ++c) s += partial[c];
  return s;
}

double dot(const double* x, const double* y, int64_t n) {
  return reduce_chunked(n, [&](int64_t lo, int64_t hi) {
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += x[i] * y[i];
    return s;
  });
}

double dot_w(const double* w, const double* x, const double* y, int64_t n) {
  return reduce_chunked(n, [&](int64_t lo, int64_t hi) {
    double s = 0.0;
    for (int64_t i = lo; i < hi; ++i) s += w[i] * x[i] * y[i];
    return s;
  });
}

double nrm2(const double* x, int64_t n) { return std::sqrt(dot(x, x, n)); }

double max_abs(const double* x, int64_t n) {
  if (n == 0) return 0.0;
  double m = 0.0;
#pragma omp parallel for schedule(static) reduction(max : m)
  for (int64_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void axpy(double a, const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void scale(double a, double* x, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) x[i] *= a;
}

void copy(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i];
}

void fill(double a, double* x, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) x[i] = a;
}

void stencil_apply(const StencilOp& S, const double* x, double* y) {
  const int64_t n = S.size();
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double s = S.diag[i] * x[i];
    const auto& cf = S.off[i];
    const auto& nb = S.nbr[i];
    for (int d = 0; d < 6; ++d)
      if (nb[d] >= 0) s += cf[d] * x[nb[d]];
    y[i] = s;
  }
}

void spectral_scale(const double* ab_re, double* z, int64_t n_complex) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n_complex; ++i) {
    z[2 * i] *= ab_re[i];
    z[2 * i + 1] *= ab_re[i];
  }
}

namespace serial {

double dot(const double* x, const double* y, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double dot_w(const double* w, const double* x, const double* y, int64_t n) {
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

double nrm2(const double* x, int64_t n) { return std::sqrt(dot(x, x, n)); }

double max_abs(const double* x, int64_t n) {
  double m = 0.0;
  for (int64_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

void axpy(double a, const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay(const double* x, double a, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void stencil_apply(const StencilOp& S, const double* x, double* y) {
  const int64_t n = S.size();
  for (int64_t i = 0; i < n; ++i) {
    double s = S.diag[i] * x[i];
    for (int d = 0; d < 6; ++d)
      if (S.nbr[i][d] >= 0) s += S.off[i][d] * x[S.nbr[i][d]];
    y[i] = s;
  }
}

void spectral_scale(const double* ab_re, double* z, int64_t n_complex) {
  for (int64_t i = 0; i < n_complex; ++i) {
    z[2 * i] *= ab_re[i];
    z[2 * i + 1] *= ab_re[i];
  }
}

}  // namespace serial
}  // namespace magsteady::kernels
