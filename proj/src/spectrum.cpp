#include "magsteady/spectrum.hpp"

#include "magsteady/kernels.hpp"

#include <cmath>
#include <random>

namespace magsteady {

// Everything the block actions need, evaluated once at the base state.
struct LinearizationBlocks::Coeffs {
  AngleField a;                   // base angles (xi possibly forced to 0)
  Vec3Field dv;                   // base demag field on Omega
  FrameDerivatives fr;
  Vec3Field gth, gxi, gc2;
  Field gt2;                      // |grad theta|^2
  Field c1, s1, c2v, s2v;         // cos xi, sin xi, cos 2xi, sin 2xi
  Field lap_xi;                   // lap xi
  Field lap_theta;                // lap theta (reference part included)
  Field divc2_theta;              // div(cos^2 xi grad theta)
  Field uthH, uxiH, uththH, uthxiH, uxixiH;
  std::shared_ptr<const StencilOp> S_lap, S_c2;
  double lambda = 0.0;
};

LinearizationBlocks::LinearizationBlocks(const SteadyContext& ctx,
                                         const SteadyState& base, double gamma,
                                         LinearizationOpts opts)
    : ctx_(&ctx), gamma_(gamma), opts_(opts) {
  auto cf = std::make_shared<Coeffs>();
  cf->a = base.angles;
  n_ = cf->a.n_cells();
  if (opts_.force_xi_zero) std::fill(cf->a.xi.begin(), cf->a.xi.end(), 0.0);
  const int64_t n = n_;

  for (int d = 0; d < 3; ++d) {
    cf->dv[d].assign(n, 0.0);
    if (opts_.demag_potential && !base.demag.empty())
      cf->dv[d] = base.demag.H_omega[d];
  }

  cf->fr = frame_derivatives(cf->a);
  cf->gth = theta_gradient(cf->a, ctx.bdata());
  cf->gxi = masked_gradient(ctx.mask(), cf->a.xi, nullptr);

  Field c2field(n);
  cf->c1.resize(n);
  cf->s1.resize(n);
  cf->c2v.resize(n);
  cf->s2v.resize(n);
  cf->gt2.resize(n);
  for (int64_t c = 0; c < n; ++c) {
    const double x = cf->a.xi[c];
    cf->c1[c] = std::cos(x);
    cf->s1[c] = std::sin(x);
    cf->c2v[c] = std::cos(2 * x);
    cf->s2v[c] = std::sin(2 * x);
    c2field[c] = cf->c1[c] * cf->c1[c];
    cf->gt2[c] = cf->gth[0][c] * cf->gth[0][c] + cf->gth[1][c] * cf->gth[1][c] +
                 cf->gth[2][c] * cf->gth[2][c];
  }
  // cos^2 xi has trace 1 on the boundary (xi = 0 there)
  cf->gc2 = masked_gradient(ctx.mask(), c2field,
                            [](double, double, double) { return 1.0; });

  cf->S_lap = divform_stencil(ctx.mask(), nullptr);
  cf->S_c2 = divform_stencil(ctx.mask(), &c2field);

  cf->lap_xi.assign(n, 0.0);
  kernels::stencil_apply(*cf->S_lap, cf->a.xi.data(), cf->lap_xi.data());
  cf->lap_theta.assign(n, 0.0);
  kernels::stencil_apply(*cf->S_lap, cf->a.phi.data(), cf->lap_theta.data());
  {
    const Field aff = ctx.theta_affine(nullptr, cf->a.winding);
    for (int64_t c = 0; c < n; ++c) cf->lap_theta[c] += aff[c];
  }
  cf->divc2_theta.assign(n, 0.0);
  kernels::stencil_apply(*cf->S_c2, cf->a.phi.data(), cf->divc2_theta.data());
  {
    const Field aff = ctx.theta_affine(&c2field, cf->a.winding);
    for (int64_t c = 0; c < n; ++c) cf->divc2_theta[c] += aff[c];
  }

  auto dot3 = [&](const Vec3Field& u, Field& out) {
    out.resize(n);
    for (int64_t c = 0; c < n; ++c)
      out[c] = u[0][c] * cf->dv[0][c] + u[1][c] * cf->dv[1][c] +
               u[2][c] * cf->dv[2][c];
  };
  dot3(cf->fr.u_theta, cf->uthH);
  dot3(cf->fr.u_xi, cf->uxiH);
  dot3(cf->fr.u_thetatheta, cf->uththH);
  dot3(cf->fr.u_thetaxi, cf->uthxiH);
  dot3(cf->fr.u_xixi, cf->uxixiH);
  cf->lambda = base.lambda;
  cf_ = std::move(cf);
}

namespace {

// gradient of a zero-trace perturbation
void grad_zero_bc(const DomainMask& mask, const double* f, Vec3Field& g) {
  const int64_t nc = mask.n_cells();
  const double h = mask.grid.h();
  for (int d = 0; d < 3; ++d) g[d].resize(nc);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c)
    for (int axis = 0; axis < 3; ++axis) {
      const int dp = 2 * axis, dm = 2 * axis + 1;
      const int32_t np = mask.neighbor[c][dp], nm = mask.neighbor[c][dm];
      const double fp = np >= 0 ? f[np] : 0.0;
      const double ap = np >= 0 ? 1.0 : mask.link_alpha[c][dp];
      const double fm = nm >= 0 ? f[nm] : 0.0;
      const double am = nm >= 0 ? 1.0 : mask.link_alpha[c][dm];
      g[axis][c] = ((fp - f[c]) * (am / ap) + (f[c] - fm) * (ap / am)) /
                   ((ap + am) * h);
    }
}

}  // namespace

void LinearizationBlocks::apply_impl(const double* in, double* out,
                                     Mode mode) const {
  const Coeffs& cf = *cf_;
  const DomainMask& mask = ctx_->mask();
  const int64_t n = n_;
  const double* phi = in;
  const double* psi = in + n;
  double* out_th = out;
  double* out_xi = out + n;
  const double g = gamma_;

  const bool coupling = opts_.demag_coupling && ctx_->demag_enabled() &&
                        mode != Mode::BaseLocal;
  const bool want_full = mode != Mode::G;
  const bool want_G = mode != Mode::Full;
  const double g_sign = mode == Mode::G ? 1.0 : -1.0;  // G alone or subtracted

  Vec3Field gphi, gpsi;
  grad_zero_bc(mask, phi, gphi);
  grad_zero_bc(mask, psi, gpsi);
  Field lap_phi(n), lap_psi(n), divc2_phi(n);
  kernels::stencil_apply(*cf.S_lap, phi, lap_phi.data());
  kernels::stencil_apply(*cf.S_lap, psi, lap_psi.data());
  kernels::stencil_apply(*cf.S_c2, phi, divc2_phi.data());

  // fused demag of the magnetization perturbation u_theta phi + u_xi psi
  Field uth_Hm(n, 0.0), uxi_Hm(n, 0.0);
  if (coupling && want_full) {
    Vec3Field m;
    for (int d = 0; d < 3; ++d) {
      m[d].resize(n);
      for (int64_t c = 0; c < n; ++c)
        m[d][c] = cf.fr.u_theta[d][c] * phi[c] + cf.fr.u_xi[d][c] * psi[c];
    }
    const DemagCompact Hm = ctx_->demag_solver().solve_compact(m);
    for (int64_t c = 0; c < n; ++c) {
      uth_Hm[c] = cf.fr.u_theta[0][c] * Hm.H_omega[0][c] +
                  cf.fr.u_theta[1][c] * Hm.H_omega[1][c] +
                  cf.fr.u_theta[2][c] * Hm.H_omega[2][c];
      uxi_Hm[c] = cf.fr.u_xi[0][c] * Hm.H_omega[0][c] +
                  cf.fr.u_xi[1][c] * Hm.H_omega[1][c] +
                  cf.fr.u_xi[2][c] * Hm.H_omega[2][c];
    }
  }
  // G21 carries gamma/cos * u_theta . L(u_theta phi)
  Field uth_Hphi(n, 0.0);
  if (coupling && want_G && g != 0.0) {
    Vec3Field m;
    for (int d = 0; d < 3; ++d) {
      m[d].resize(n);
      for (int64_t c = 0; c < n; ++c) m[d][c] = cf.fr.u_theta[d][c] * phi[c];
    }
    const DemagCompact Hp = ctx_->demag_solver().solve_compact(m);
    for (int64_t c = 0; c < n; ++c)
      uth_Hphi[c] = cf.fr.u_theta[0][c] * Hp.H_omega[0][c] +
                    cf.fr.u_theta[1][c] * Hp.H_omega[1][c] +
                    cf.fr.u_theta[2][c] * Hp.H_omega[2][c];
  }

#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < n; ++c) {
    const double c1 = cf.c1[c], s1 = cf.s1[c];
    const double c2 = cf.c2v[c], s2 = cf.s2v[c];
    const double ic1 = 1.0 / c1, ic2 = 1.0 / (c1 * c1);
    const double gthgphi = cf.gth[0][c] * gphi[0][c] +
                           cf.gth[1][c] * gphi[1][c] +
                           cf.gth[2][c] * gphi[2][c];
    const double gthgpsi = cf.gth[0][c] * gpsi[0][c] +
                           cf.gth[1][c] * gpsi[1][c] +
                           cf.gth[2][c] * gpsi[2][c];
    const double gc2gphi = cf.gc2[0][c] * gphi[0][c] +
                           cf.gc2[1][c] * gphi[1][c] +
                           cf.gc2[2][c] * gphi[2][c];
    const double gxigth = cf.gxi[0][c] * cf.gth[0][c] +
                          cf.gxi[1][c] * cf.gth[1][c] +
                          cf.gxi[2][c] * cf.gth[2][c];

    double row_th = 0.0, row_xi = 0.0;
    if (want_full) {
      row_th = lap_phi[c] + ic2 * gc2gphi - g * (s2 * ic1) * gthgphi +
               ic2 * cf.uththH[c] * phi[c] - g * ic1 * cf.uthxiH[c] * phi[c] +
               ic2 * uth_Hm[c] - g * ic1 * uxi_Hm[c] +
               2.0 * ic2 * gxigth * psi[c] - 2.0 * (s1 * ic1) * gthgpsi +
               ic2 * cf.uthxiH[c] * psi[c] +
               2.0 * (s1 * ic2 * ic1) * cf.uthH[c] * psi[c] -
               g * (s1 * ic2) *
                   (cf.lap_xi[c] +
                    (0.5 * cf.gt2[c] - cf.lambda) * s2 + cf.uxiH[c]) *
                   psi[c] -
               g * ic1 * (lap_psi[c] + (cf.gt2[c] - 2.0 * cf.lambda) * c2 *
                                           psi[c]) -
               g * ic1 * cf.uxixiH[c] * psi[c];
      row_xi = lap_psi[c] + (cf.gt2[c] - 2.0 * cf.lambda) * c2 * psi[c] +
               cf.uxixiH[c] * psi[c] + s2 * gthgphi +
               g * ic1 * (c1 * c1 * lap_phi[c] + gc2gphi) +
               cf.uthxiH[c] * phi[c] + uxi_Hm[c] + g * ic1 * uth_Hm[c] +
               g * ic1 * (-s2 * cf.lap_theta[c] - 2.0 * c2 * gxigth) * psi[c] -
               g * ic1 * s2 * gthgpsi +
               g * (s1 * ic2) * cf.divc2_theta[c] * psi[c];
    }
    if (want_G) {
      const double G_th = ic2 * gc2gphi - g * (s2 * ic1) * gthgphi -
                          (s2 * ic2) * gthgpsi - g * ic1 * lap_psi[c] +
                          2.0 * g * cf.lambda * ic1 * (c2 + s1 * s1) * psi[c];
      const double G_xi = s2 * gthgphi +
                          g * ic1 * (c1 * c1 * lap_phi[c] + gc2gphi) +
                          cf.uthxiH[c] * phi[c] +
                          g * ic1 * (cf.uththH[c] * phi[c] + uth_Hphi[c]) -
                          g * ic1 * s2 * gthgpsi;
      row_th += g_sign * G_th;
      row_xi += g_sign * G_xi;
    }
    out_th[c] = row_th;
    out_xi[c] = row_xi;
  }
}

void LinearizationBlocks::apply_full(const double* in, double* out) const {
  apply_impl(in, out, Mode::Full);
}
void LinearizationBlocks::apply_G(const double* in, double* out) const {
  apply_impl(in, out, Mode::G);
}
void LinearizationBlocks::apply_base(const double* in, double* out) const {
  apply_impl(in, out, Mode::Base);
}
void LinearizationBlocks::apply_base_local(const double* in,
                                           double* out) const {
  apply_impl(in, out, Mode::BaseLocal);
}

DiscreteOperator LinearizationBlocks::negated_base_operator() const {
  DiscreteOperator B;
  B.size = pair_size();
  B.symmetric_hint = false;
  const LinearizationBlocks* self = this;
  B.action = [self](const double* x, double* y) {
    self->apply_base(x, y);
    for (int64_t i = 0; i < self->pair_size(); ++i) y[i] = -y[i];
  };
  B.local_action = [self](const double* x, double* y) {
    self->apply_base_local(x, y);
    for (int64_t i = 0; i < self->pair_size(); ++i) y[i] = -y[i];
  };
  return B;
}

double LinearizationBlocks::asymmetry_estimate(int samples,
                                               uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  const int64_t m = pair_size();
  Field x(m), y(m), Bx(m), By(m);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    for (auto& v : x) v = N01(rng);
    for (auto& v : y) v = N01(rng);
    apply_base(x.data(), Bx.data());
    apply_base(y.data(), By.data());
    const double a = kernels::dot(Bx.data(), y.data(), m);
    const double b = kernels::dot(x.data(), By.data(), m);
    const double scale = kernels::nrm2(Bx.data(), m) * kernels::nrm2(y.data(), m) +
                         kernels::nrm2(x.data(), m) * kernels::nrm2(By.data(), m);
    worst = std::max(worst, std::fabs(a - b) / scale);
  }
  return worst;
}

SpectrumReport spectral_gap(const LinearizationBlocks& blocks, int k,
                            const SolverParams& p, const EigenOpts* eopts) {
  EigenOpts eo;
  if (eopts) eo = *eopts;
  eo.tol = p.eigen_tol;
  if (!eopts) eo.seed = p.seed;
  DiscreteOperator B = blocks.negated_base_operator();
  std::vector<EigenPair> pairs = smallest_eigenpairs(B, k, eo);

  const DomainMask& mask = blocks.context().mask();
  const int64_t n = blocks.n();
  SpectrumReport rep;
  for (const EigenPair& pr : pairs) {
    rep.eigenvalues.push_back(pr.value);
    rep.residuals.push_back(pr.residual);
    Field phre(pr.vec_re.begin(), pr.vec_re.begin() + n);
    Field psre(pr.vec_re.begin() + n, pr.vec_re.end());
    Field phim(n, 0.0), psim(n, 0.0);
    if (!pr.vec_im.empty()) {
      phim.assign(pr.vec_im.begin(), pr.vec_im.begin() + n);
      psim.assign(pr.vec_im.begin() + n, pr.vec_im.end());
    }
    // normalize ||phi||^2 + ||psi||^2 = 1 in L2(Omega)
    const double nrm2 = mask.dot_omega(phre, phre) + mask.dot_omega(phim, phim) +
                        mask.dot_omega(psre, psre) + mask.dot_omega(psim, psim);
    const double s = 1.0 / std::sqrt(nrm2);
    for (auto* f : {&phre, &phim, &psre, &psim})
      for (double& v : *f) v *= s;
    rep.psi_mass.push_back(mask.dot_omega(psre, psre) +
                           mask.dot_omega(psim, psim));
    rep.phi_re.push_back(std::move(phre));
    rep.phi_im.push_back(std::move(phim));
    rep.psi_re.push_back(std::move(psre));
    rep.psi_im.push_back(std::move(psim));
  }
  rep.gap = rep.eigenvalues.empty() ? 0.0 : rep.eigenvalues.front().real();
  return rep;
}

TBoundStats tbound_check(const LinearizationBlocks& blocks, double beta,
                         int samples, uint64_t seed) {
  if (!(beta > 0.0)) throw ConfigError("tbound: beta must be positive");
  if (samples < 1) throw ConfigError("tbound: need at least one sample");
  const DomainMask& mask = blocks.context().mask();
  const int64_t n = blocks.n(), m = blocks.pair_size();
  std::mt19937_64 rng(seed);

  TBoundStats st;
  st.beta = beta;
  Field x(m), Gx(m), Bx(m);
  for (int s = 0; s < samples; ++s) {
    Field a = smooth_random_field(mask, rng);
    Field b = smooth_random_field(mask, rng);
    std::copy(a.begin(), a.end(), x.begin());
    std::copy(b.begin(), b.end(), x.begin() + n);
    blocks.apply_G(x.data(), Gx.data());
    blocks.apply_base(x.data(), Bx.data());
    // T = beta I - base
    auto onorm = [&](const double* f) {
      Field ph(f, f + n), ps(f + n, f + m);
      return std::sqrt(mask.dot_omega(ph, ph) + mask.dot_omega(ps, ps));
    };
    Field Tx(m);
    for (int64_t i = 0; i < m; ++i) Tx[i] = beta * x[i] - Bx[i];
    const double ratio =
        onorm(Gx.data()) / ((beta + 1.0) * onorm(x.data()) + onorm(Tx.data()));
    st.ratios.push_back(ratio);
    st.max_ratio = std::max(st.max_ratio, ratio);
  }
  return st;
}

DiscreteOperator limit_linearization(const SteadyContext& ctx,
                                     const LimitState& limit, double gamma) {
  const DomainMask& mask = ctx.mask();
  const int64_t n = mask.n_cells();
  auto S_lap = divform_stencil(mask, nullptr);

  // frame fields at (theta_*, 0)
  auto fr = std::make_shared<FrameDerivatives>(frame_derivatives(limit.angles));
  auto uththH = std::make_shared<Field>(n, 0.0);
  for (int64_t c = 0; c < n; ++c)
    (*uththH)[c] = fr->u_thetatheta[0][c] * limit.demag.H_omega[0][c] +
                   fr->u_thetatheta[1][c] * limit.demag.H_omega[1][c] +
                   fr->u_thetatheta[2][c] * limit.demag.H_omega[2][c];

  const SteadyContext* ctxp = &ctx;
  const bool coupling = ctx.demag_enabled();

  DiscreteOperator B;
  B.size = n;
  B.symmetric_hint = (gamma == 0.0);
  B.mask = &mask;
  auto local = [S_lap, uththH, n](const double* x, double* y) {
    kernels::stencil_apply(*S_lap, x, y);
    for (int64_t c = 0; c < n; ++c) y[c] = -(y[c] + (*uththH)[c] * x[c]);
  };
  B.local_action = local;
  B.action = [local, fr, ctxp, coupling, gamma, n](const double* x, double* y) {
    local(x, y);
    if (!coupling) return;
    Vec3Field m;
    for (int d = 0; d < 3; ++d) {
      m[d].resize(n);
      for (int64_t c = 0; c < n; ++c) m[d][c] = fr->u_theta[d][c] * x[c];
    }
    const DemagCompact h = ctxp->demag_solver().solve_compact(m);
    for (int64_t c = 0; c < n; ++c) {
      const double coup = fr->u_theta[0][c] * h.H_omega[0][c] +
                          fr->u_theta[1][c] * h.H_omega[1][c] +
                          (fr->u_theta[2][c] - gamma) * h.H_omega[2][c];
      y[c] -= coup;
    }
  };
  return B;
}

}  // namespace magsteady
