// kernels.hpp — cell-parallel primitives shared by all solvers.
//
// Every kernel comes in two flavors: the OpenMP one used in production and a
// plain serial reference in kernels::serial used by the tests and the
// benchmark. Reductions are chunked over a fixed grid of FIXED_CHUNKS blocks
// and the partial sums are combined in block order, so results do not depend
// on the number of threads.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace magsteady {

// Sparse stencil in compact-cell layout: row i couples cell i to at most
// six neighbors. nbr < 0 marks a Dirichlet link (no column, the boundary
// contribution lives in the affine right-hand side).
struct StencilOp {
  std::vector<double> diag;                  // n
  std::vector<std::array<double, 6>> off;    // n x 6 coefficients
  std::vector<std::array<int32_t, 6>> nbr;   // n x 6 neighbor ids, -1 = none
  int64_t size() const { return static_cast<int64_t>(diag.size()); }
};

namespace kernels {

constexpr int FIXED_CHUNKS = 256;

double dot(const double* x, const double* y, int64_t n);
double dot_w(const double* w, const double* x, const double* y, int64_t n);
double nrm2(const double* x, int64_t n);
double max_abs(const double* x, int64_t n);
void axpy(double a, const double* x, double* y, int64_t n);       // y += a*x
void xpay(const double* x, double a, double* y, int64_t n);       // y = x + a*y
void scale(double a, double* x, int64_t n);
void copy(const double* x, double* y, int64_t n);
void fill(double a, double* x, int64_t n);

// y = S x (homogeneous part; Dirichlet links contribute nothing)
void stencil_apply(const StencilOp& S, const double* x, double* y);

// z[i] = a[i]*b[i] pointwise complex multiply, interleaved (re,im) pairs,
// b real-valued spectrum
void spectral_scale(const double* ab_re, double* z, int64_t n_complex);

namespace serial {
double dot(const double* x, const double* y, int64_t n);
double dot_w(const double* w, const double* x, const double* y, int64_t n);
double nrm2(const double* x, int64_t n);
double max_abs(const double* x, int64_t n);
void axpy(double a, const double* x, double* y, int64_t n);
void xpay(const double* x, double a, double* y, int64_t n);
void stencil_apply(const StencilOp& S, const double* x, double* y);
void spectral_scale(const double* ab_re, double* z, int64_t n_complex);
}  // namespace serial

}  // namespace kernels
}  // namespace magsteady
