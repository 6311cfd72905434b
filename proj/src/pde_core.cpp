#include "magsteady/pde_core.hpp"

#include "magsteady/kernels.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

namespace magsteady {

using kernels::axpy;
using kernels::dot;
using kernels::nrm2;

std::shared_ptr<StencilOp> divform_stencil(const DomainMask& mask,
                                           const Field* coefficient) {
  const int64_t nc = mask.n_cells();
  const double h2 = mask.grid.h() * mask.grid.h();
  auto S = std::make_shared<StencilOp>();
  S->diag.assign(nc, 0.0);
  S->off.assign(nc, {0, 0, 0, 0, 0, 0});
  S->nbr.assign(nc, {-1, -1, -1, -1, -1, -1});

  if (coefficient) {
    for (int64_t c = 0; c < nc; ++c)
      if (!((*coefficient)[c] > 0.0))
        throw ChartError("divform: non-positive coefficient");
  }

#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const double ci = coefficient ? (*coefficient)[c] : 1.0;
    double diag = 0.0;
    for (int d = 0; d < 6; ++d) {
      const int32_t nb = mask.neighbor[c][d];
      if (nb >= 0) {
        const double cj = coefficient ? (*coefficient)[nb] : 1.0;
        const double cf = 0.5 * (ci + cj) / h2;
        S->off[c][d] = cf;
        S->nbr[c][d] = nb;
        diag -= cf;
      } else {
        diag -= ci / (mask.link_alpha[c][d] * h2);
      }
    }
    S->diag[c] = diag;
  }
  return S;
}

DiscreteOperator divform_operator(const DomainMask& mask,
                                  const Field& coefficient) {
  DiscreteOperator A;
  A.size = mask.n_cells();
  A.symmetric_hint = true;
  A.mask = &mask;
  A.stencil = divform_stencil(mask, &coefficient);
  auto S = A.stencil;
  A.action = [S](const double* x, double* y) {
    kernels::stencil_apply(*S, x, y);
  };
  return A;
}

DiscreteOperator laplacian_dirichlet(const DomainMask& mask) {
  DiscreteOperator A;
  A.size = mask.n_cells();
  A.symmetric_hint = true;
  A.mask = &mask;
  A.stencil = divform_stencil(mask, nullptr);
  auto S = A.stencil;
  A.action = [S](const double* x, double* y) {
    kernels::stencil_apply(*S, x, y);
  };
  return A;
}

Field dirichlet_rhs(const DomainMask& mask, const Field* coefficient,
                    const std::function<double(double, double, double)>& g) {
  const double h2 = mask.grid.h() * mask.grid.h();
  Field b(mask.n_cells(), 0.0);
  if (!g) return b;
  for (const CutLink& L : mask.cut_links) {
    const double ci = coefficient ? (*coefficient)[L.cell] : 1.0;
    b[L.cell] += ci * g(L.px, L.py, L.pz) / (L.alpha * h2);
  }
  return b;
}

namespace {

SolveInfo cg(const DiscreteOperator& A, const Field& rhs, Field& x,
             const SolveOpts& opts) {
  const int64_t n = A.size;
  const double bnorm = nrm2(rhs.data(), n);
  SolveInfo info;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    info.converged = true;
    return info;
  }
  Field r(n), p(n), Ap(n);
  if (opts.x0) {
    x = *opts.x0;
    A.action(x.data(), Ap.data());
    for (int64_t i = 0; i < n; ++i) r[i] = rhs[i] - Ap[i];
  } else {
    x.assign(n, 0.0);
    r = rhs;
  }
  p = r;
  double rr = dot(r.data(), r.data(), n);
  for (int it = 0; it < opts.max_iters; ++it) {
    info.iterations = it + 1;
    A.action(p.data(), Ap.data());
    const double pAp = dot(p.data(), Ap.data(), n);
    if (!(pAp > 0.0)) {
      info.rel_residual = std::sqrt(rr) / bnorm;
      return info;  // indefinite; let the caller decide
    }
    const double alpha = rr / pAp;
    axpy(alpha, p.data(), x.data(), n);
    axpy(-alpha, Ap.data(), r.data(), n);
    const double rr_new = dot(r.data(), r.data(), n);
    info.rel_residual = std::sqrt(rr_new) / bnorm;
    if (info.rel_residual <= opts.tol) {
      info.converged = true;
      return info;
    }
    kernels::xpay(r.data(), rr_new / rr, p.data(), n);
    rr = rr_new;
  }
  return info;
}

SolveInfo bicgstab(const DiscreteOperator& A, const Field& rhs, Field& x,
                   const SolveOpts& opts) {
  const int64_t n = A.size;
  const double bnorm = nrm2(rhs.data(), n);
  SolveInfo info;
  if (bnorm == 0.0) {
    x.assign(n, 0.0);
    info.converged = true;
    return info;
  }
  Field r(n), r0(n), p(n), v(n), s(n), t(n);
  if (opts.x0) {
    x = *opts.x0;
    A.action(x.data(), v.data());
    for (int64_t i = 0; i < n; ++i) r[i] = rhs[i] - v[i];
  } else {
    x.assign(n, 0.0);
    r = rhs;
  }
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  for (int it = 0; it < opts.max_iters; ++it) {
    info.iterations = it + 1;
    const double rho_new = dot(r0.data(), r.data(), n);
    if (rho_new == 0.0) break;  // breakdown
    if (it == 0) {
      p = r;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      for (int64_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho_new;
    A.action(p.data(), v.data());
    const double r0v = dot(r0.data(), v.data(), n);
    if (r0v == 0.0) break;
    alpha = rho / r0v;
    for (int64_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (nrm2(s.data(), n) / bnorm <= opts.tol) {
      axpy(alpha, p.data(), x.data(), n);
      info.rel_residual = nrm2(s.data(), n) / bnorm;
      info.converged = true;
      return info;
    }
    A.action(s.data(), t.data());
    const double tt = dot(t.data(), t.data(), n);
    if (tt == 0.0) break;
    omega = dot(t.data(), s.data(), n) / tt;
    for (int64_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i] + omega * s[i];
      r[i] = s[i] - omega * t[i];
    }
    info.rel_residual = nrm2(r.data(), n) / bnorm;
    if (info.rel_residual <= opts.tol) {
      info.converged = true;
      return info;
    }
    if (omega == 0.0) break;
  }
  return info;
}

}  // namespace

SolveInfo try_solve_linear(const DiscreteOperator& A, const Field& rhs,
                           Field& x, const SolveOpts& opts) {
  if (A.symmetric_hint) {
    SolveInfo info = cg(A, rhs, x, opts);
    if (info.converged) return info;
    // fall through to the stabilized path on CG trouble
  }
  return bicgstab(A, rhs, x, opts);
}

SolveInfo solve_linear(const DiscreteOperator& A, const Field& rhs, Field& x,
                       const SolveOpts& opts) {
  SolveInfo info = try_solve_linear(A, rhs, x, opts);
  if (!info.converged)
    throw SolveError("linear solve: iteration cap exceeded", info.rel_residual,
                     info.iterations);
  return info;
}

namespace {

void orthonormalize(std::vector<Field>& X) {
  const int64_t n = static_cast<int64_t>(X[0].size());
  for (size_t j = 0; j < X.size(); ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (size_t i = 0; i < j; ++i)
        axpy(-dot(X[i].data(), X[j].data(), n), X[i].data(), X[j].data(), n);
    const double nrm = nrm2(X[j].data(), n);
    if (nrm < 1e-300) throw SolveError("eigensolver: block became singular");
    kernels::scale(1.0 / nrm, X[j].data(), n);
  }
}

}  // namespace

std::vector<EigenPair> smallest_eigenpairs(const DiscreteOperator& A, int k,
                                           const EigenOpts& opts) {
  if (k < 1) throw ConfigError("eigensolver: k must be >= 1");
  const int64_t n = A.size;
  const int b = opts.block > 0 ? opts.block
                               : std::min<int64_t>(std::max(2 * k, k + 6), n);
  if (k > b || b > n) throw ConfigError("eigensolver: block larger than space");

  auto local = A.local_action ? A.local_action : A.action;
  double shift = opts.shift;

  // y solves (A - shift) y = x: invert the local part, treat the compact
  // remainder by outer correction
  auto inverse_apply = [&](const Field& x, Field& y) {
    DiscreteOperator Ls;
    Ls.size = n;
    Ls.symmetric_hint = A.symmetric_hint;
    Ls.action = [&](const double* in, double* out) {
      local(in, out);
      if (shift != 0.0) axpy(-shift, in, out, n);
    };
    SolveOpts so;
    so.tol = 1e-10;
    Field rhs = x, corr(n), Ay(n);
    try_solve_linear(Ls, rhs, y, so);
    const bool split = static_cast<bool>(A.local_action);
    if (!split) return;
    const double xnorm = nrm2(x.data(), n);
    for (int it = 0; it < 30; ++it) {
      A.action(y.data(), Ay.data());
      if (shift != 0.0) axpy(-shift, y.data(), Ay.data(), n);
      for (int64_t i = 0; i < n; ++i) rhs[i] = x[i] - Ay[i];
      const double rn = nrm2(rhs.data(), n);
      if (rn <= 1e-11 * xnorm) return;
      SolveOpts si;
      si.tol = 1e-8;
      try_solve_linear(Ls, rhs, corr, si);
      axpy(1.0, corr.data(), y.data(), n);
    }
  };

  // initial block
  std::vector<Field> X(b, Field(n));
  {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> N01(0.0, 1.0);
    size_t j0 = 0;
    if (opts.initial_block) {
      for (; j0 < std::min<size_t>(b, opts.initial_block->size()); ++j0)
        X[j0] = (*opts.initial_block)[j0];
    }
    for (size_t j = j0; j < static_cast<size_t>(b); ++j)
      for (int64_t i = 0; i < n; ++i) X[j][i] = N01(rng);
    orthonormalize(X);
  }

  std::vector<Field> AX(b, Field(n)), Y(b, Field(n));
  std::vector<EigenPair> result;
  double last_mu1 = 0.0;

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    for (int j = 0; j < b; ++j) inverse_apply(X[j], Y[j]);
    X.swap(Y);
    orthonormalize(X);

    for (int j = 0; j < b; ++j) A.apply(X[j], AX[j]);
    Eigen::MatrixXd B(b, b);
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        B(i, j) = dot(X[i].data(), AX[j].data(), n);
    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success)
      throw SolveError("eigensolver: dense Ritz factorization failed");

    std::vector<int> order(b);
    for (int i = 0; i < b; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int p, int q) {
      const auto vp = es.eigenvalues()(p), vq = es.eigenvalues()(q);
      if (vp.real() != vq.real()) return vp.real() < vq.real();
      return vp.imag() < vq.imag();
    });

    result.assign(k, {});
    bool all_ok = true;
    for (int m = 0; m < k; ++m) {
      const int q = order[m];
      const std::complex<double> mu = es.eigenvalues()(q);
      EigenPair pair;
      pair.value = mu;
      pair.vec_re.assign(n, 0.0);
      const bool real_pair = std::fabs(mu.imag()) <
                             1e-12 * (std::fabs(mu.real()) + 1.0);
      if (!real_pair) pair.vec_im.assign(n, 0.0);
      Field Az_re(n, 0.0), Az_im;
      if (!real_pair) Az_im.assign(n, 0.0);
      for (int j = 0; j < b; ++j) {
        const std::complex<double> w = es.eigenvectors()(j, q);
        axpy(w.real(), X[j].data(), pair.vec_re.data(), n);
        axpy(w.real(), AX[j].data(), Az_re.data(), n);
        if (!real_pair) {
          axpy(w.imag(), X[j].data(), pair.vec_im.data(), n);
          axpy(w.imag(), AX[j].data(), Az_im.data(), n);
        }
      }
      // residual (A - mu) z over ||z||, complex arithmetic on real parts
      double res2 = 0.0, znorm2 = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const double zr = pair.vec_re[i];
        const double zi = real_pair ? 0.0 : pair.vec_im[i];
        const double ar = Az_re[i] - (mu.real() * zr - mu.imag() * zi);
        const double ai = (real_pair ? 0.0 : Az_im[i]) -
                          (mu.real() * zi + mu.imag() * zr);
        res2 += ar * ar + ai * ai;
        znorm2 += zr * zr + zi * zi;
      }
      pair.residual = std::sqrt(res2 / znorm2);
      const double scale = 1.0 / std::sqrt(znorm2);
      kernels::scale(scale, pair.vec_re.data(), n);
      if (!real_pair) kernels::scale(scale, pair.vec_im.data(), n);
      if (pair.residual > opts.tol * std::max(1.0, std::abs(mu))) all_ok = false;
      result[m] = std::move(pair);
    }
    if (all_ok && outer >= 1) return result;

    if (opts.auto_shift && outer == 1) {
      last_mu1 = result[0].value.real();
      if (last_mu1 > 0.0) shift = opts.shift + 0.5 * (last_mu1 - opts.shift);
    }
  }
  throw SolveError(
      "eigensolver: no convergence; leading Ritz residual " +
          std::to_string(result.empty() ? -1.0 : result[0].residual),
      result.empty() ? -1.0 : result[0].residual, opts.max_outer);
}

Field smooth_random_field(const DomainMask& mask, std::mt19937_64& rng) {
  const int64_t n = mask.n_cells();
  std::normal_distribution<double> N01(0.0, 1.0);
  Field x(n);
  for (double& v : x) v = N01(rng);

  const double kappa = 4.0 * mask.grid.h() * mask.grid.h();
  auto S = divform_stencil(mask, nullptr);
  DiscreteOperator A;
  A.size = n;
  A.symmetric_hint = true;
  A.mask = &mask;
  A.action = [S, kappa, n](const double* in, double* out) {
    kernels::stencil_apply(*S, in, out);
    for (int64_t i = 0; i < n; ++i) out[i] = in[i] - kappa * out[i];
  };
  SolveOpts so;
  so.tol = 1e-10;
  Field y(n);
  solve_linear(A, x, y, so);
  solve_linear(A, y, x, so);
  const double nrm = mask.nrm_omega(x);
  for (double& v : x) v /= nrm;
  return x;
}

}  // namespace magsteady
