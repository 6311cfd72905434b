// pde_core.hpp — matrix-free elliptic machinery: masked Dirichlet operators,
// Krylov solves, and leading-eigenpair extraction.
#pragma once

#include "magsteady/domain.hpp"
#include "magsteady/field.hpp"

#include <complex>
#include <functional>
#include <memory>
#include <random>

namespace magsteady {

struct StencilOp;

struct DiscreteOperator {
  int64_t size = 0;
  bool symmetric_hint = false;
  const DomainMask* mask = nullptr;
  std::function<void(const double*, double*)> action;
  // Optional split A = local + compact remainder: the eigensolver inverts
  // the cheap local part and treats the remainder by outer iteration.
  std::function<void(const double*, double*)> local_action;
  std::shared_ptr<const StencilOp> stencil;  // set for pure stencil operators

  void apply(const Field& x, Field& y) const {
    y.resize(x.size());
    action(x.data(), y.data());
  }
};

// div(c grad .) with zero Dirichlet trace; face coefficients are arithmetic
// means, cut links use the one-sided interface distance. Negative definite.
std::shared_ptr<StencilOp> divform_stencil(const DomainMask& mask,
                                           const Field* coefficient);
DiscreteOperator divform_operator(const DomainMask& mask,
                                  const Field& coefficient);
DiscreteOperator laplacian_dirichlet(const DomainMask& mask);

// Affine boundary part: b(i) = sum over cut links of c_i * g(p)/(alpha h^2),
// so that the inhomogeneous operator is  A f + b.
Field dirichlet_rhs(const DomainMask& mask, const Field* coefficient,
                    const std::function<double(double, double, double)>& g);

struct SolveInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

struct SolveOpts {
  double tol = 1e-8;
  int max_iters = 20000;
  const Field* x0 = nullptr;
};

// Conjugate gradients when symmetric_hint, BiCGStab otherwise. Throws
// SolveError with the final residual when the iteration cap is hit.
SolveInfo solve_linear(const DiscreteOperator& A, const Field& rhs, Field& x,
                       const SolveOpts& opts = {});
// Same but reports failure in SolveInfo instead of throwing.
SolveInfo try_solve_linear(const DiscreteOperator& A, const Field& rhs,
                           Field& x, const SolveOpts& opts = {});

struct EigenPair {
  std::complex<double> value;
  Field vec_re, vec_im;  // vec_im empty for real pairs
  double residual = 0.0;
};

struct EigenOpts {
  double tol = 1e-6;          // relative eigen residual
  double shift = 0.0;         // invert (A - shift I)
  bool auto_shift = true;     // re-center the shift after a warmup Ritz pass
  int block = 0;              // 0: max(2k, k+6)
  int max_outer = 300;
  uint64_t seed = 20240817;
  const std::vector<Field>* initial_block = nullptr;
};

// Block subspace iteration with shifted inverse via the Krylov solver;
// smallest real part first. Complex conjugate pairs appear when the
// operator is not symmetric.
std::vector<EigenPair> smallest_eigenpairs(const DiscreteOperator& A, int k,
                                           const EigenOpts& opts = {});

// Smooth random field with zero boundary trace: white noise smoothed twice
// by (I - (2h)^2 lap)^{-1}, normalized to unit L2(Omega) norm.
Field smooth_random_field(const DomainMask& mask, std::mt19937_64& rng);

}  // namespace magsteady
