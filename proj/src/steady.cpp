#include "magsteady/steady.hpp"

#include "magsteady/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace magsteady {

namespace {

double wrap_pi(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

Field theta_values(const AngleField& a) {
  Field t(a.n_cells());
  for (int64_t c = 0; c < a.n_cells(); ++c) t[c] = a.theta(c);
  return t;
}

double h_norm(const DomainMask& mask, const Vec3Field& a, const Vec3Field& b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d)
    for (int64_t c = 0; c < mask.n_cells(); ++c) {
      const double diff = a[d][c] - b[d][c];
      s += diff * diff;
    }
  return std::sqrt(s * std::pow(mask.grid.h(), 3));
}

DiscreteOperator stencil_plus_diag(const DomainMask& mask,
                                   std::shared_ptr<const StencilOp> S,
                                   Field diag, bool negate) {
  DiscreteOperator A;
  A.size = mask.n_cells();
  A.symmetric_hint = true;
  A.mask = &mask;
  auto dptr = std::make_shared<Field>(std::move(diag));
  A.action = [S, dptr, negate](const double* x, double* y) {
    kernels::stencil_apply(*S, x, y);
    const int64_t n = S->size();
    if (negate) {
      for (int64_t i = 0; i < n; ++i) y[i] = -(y[i] + (*dptr)[i] * x[i]);
    } else {
      for (int64_t i = 0; i < n; ++i) y[i] += (*dptr)[i] * x[i];
    }
  };
  return A;
}

}  // namespace

SteadyContext::SteadyContext(std::shared_ptr<const DomainMask> mask,
                             BoundaryData bdata, bool demag_enabled)
    : mask_(std::move(mask)),
      bdata_(std::move(bdata)),
      demag_enabled_(demag_enabled) {
  ref_ = std::make_shared<const ReferenceAngle>(reference_angle(*mask_));
  demag_ = std::make_unique<DemagSolver>(mask_);

  const int64_t nc = mask_->n_cells();
  dref_.assign(nc, {0, 0, 0, 0, 0, 0});
  g0_cut_.assign(nc, {0, 0, 0, 0, 0, 0});
  for (int64_t c = 0; c < nc; ++c) {
    for (int d = 0; d < 6; ++d) {
      const int32_t nb = mask_->neighbor[c][d];
      if (nb >= 0)
        dref_[c][d] = wrap_pi(ref_->value[nb] - ref_->value[c]);
    }
  }
  for (const CutLink& L : mask_->cut_links) {
    dref_[L.cell][L.dir] =
        wrap_pi(std::atan2(L.py, L.px) - ref_->value[L.cell]);
    g0_cut_[L.cell][L.dir] = bdata_.eval_g0(L.px, L.py, L.pz);
  }

  double rho_sum = 0.0;
  for (int64_t c = 0; c < nc; ++c)
    rho_sum += std::hypot(mask_->cx(c), mask_->cy(c));
  try {
    loop_ = core_loop(*mask_, rho_sum / static_cast<double>(nc));
  } catch (const GeometryError&) {
    loop_.clear();  // diagnostic masks without a handle skip winding checks
  }
}

AngleField SteadyContext::make_angles() const {
  return make_angle_field(mask_, ref_, bdata_.winding);
}

DemagCompact SteadyContext::zero_demag() const {
  DemagCompact z;
  z.v_omega.assign(mask_->n_cells(), 0.0);
  for (int d = 0; d < 3; ++d) z.H_omega[d].assign(mask_->n_cells(), 0.0);
  return z;
}

DemagCompact SteadyContext::demag_of(const AngleField& a) const {
  if (!demag_enabled_) return zero_demag();
  return demag_->solve_compact(assemble_u(a));
}

Field SteadyContext::theta_affine(const Field* c2, int winding) const {
  const int64_t nc = mask_->n_cells();
  const double h2 = mask_->grid.h() * mask_->grid.h();
  Field b(nc, 0.0);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const double ci = c2 ? (*c2)[c] : 1.0;
    double acc = 0.0;
    for (int d = 0; d < 6; ++d) {
      const int32_t nb = mask_->neighbor[c][d];
      if (nb >= 0) {
        const double cf = 0.5 * (ci + (c2 ? (*c2)[nb] : 1.0));
        acc += cf * winding * dref_[c][d];
      } else {
        const double alpha = mask_->link_alpha[c][d];
        acc += (ci / alpha) * (winding * dref_[c][d] + g0_cut_[c][d]);
      }
    }
    b[c] = acc / h2;
  }
  return b;
}

void SteadyContext::core_residuals(const AngleField& a,
                                   const Vec3Field& H_omega, double lambda,
                                   Field& r_theta, Field& r_xi) const {
  const int64_t nc = mask_->n_cells();
  Field c2(nc);
  for (int64_t c = 0; c < nc; ++c) {
    const double cx = std::cos(a.xi[c]);
    c2[c] = cx * cx;
  }
  auto S_c2 = divform_stencil(*mask_, &c2);
  const Field affine = theta_affine(&c2, a.winding);
  r_theta.assign(nc, 0.0);
  kernels::stencil_apply(*S_c2, a.phi.data(), r_theta.data());

  auto S_lap = divform_stencil(*mask_, nullptr);
  r_xi.assign(nc, 0.0);
  kernels::stencil_apply(*S_lap, a.xi.data(), r_xi.data());

  const Vec3Field gth = theta_gradient(a, bdata_);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const double t = a.theta(c), x = a.xi[c];
    const double ct = std::cos(t), st = std::sin(t);
    const double cx = std::cos(x), sx = std::sin(x);
    const double Hx = H_omega[0][c], Hy = H_omega[1][c], Hz = H_omega[2][c];
    const double gt2 = gth[0][c] * gth[0][c] + gth[1][c] * gth[1][c] +
                       gth[2][c] * gth[2][c];
    // u_theta . H and u_xi . H
    const double uth_H = -cx * st * Hx + cx * ct * Hy;
    const double uxi_H = -sx * ct * Hx - sx * st * Hy + cx * Hz;
    r_theta[c] += affine[c] + uth_H;
    r_xi[c] += -(lambda - 0.5 * gt2) * std::sin(2.0 * x) + uxi_H;
  }
}

void SteadyContext::newton_theta(AngleField& a, const Vec3Field& H_omega,
                                 const SolverParams& p) const {
  const int64_t nc = mask_->n_cells();
  Field c2(nc);
  for (int64_t c = 0; c < nc; ++c) {
    const double cx = std::cos(a.xi[c]);
    c2[c] = cx * cx;
  }
  auto S = divform_stencil(*mask_, &c2);
  const Field affine = theta_affine(&c2, a.winding);

  auto residual = [&](const Field& phi, Field& r) {
    r.assign(nc, 0.0);
    kernels::stencil_apply(*S, phi.data(), r.data());
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < nc; ++c) {
      const double t = a.winding * ref_->value[c] + phi[c];
      const double cx = std::cos(a.xi[c]);
      const double uth_H =
          cx * (-std::sin(t) * H_omega[0][c] + std::cos(t) * H_omega[1][c]);
      r[c] += affine[c] + uth_H;
    }
  };

  const double tol = std::max(0.02 * p.fixed_point_tol, 1e-14);
  Field r(nc), delta(nc), phi_try(nc), r_try(nc);
  residual(a.phi, r);
  double rn = mask_->nrm_omega(r);
  std::ostringstream trace;
  for (int it = 0; it < 40; ++it) {
    if (rn <= tol) return;
    // J = S + diag(u_thetatheta . H); solve (-J) delta = r
    Field jd(nc);
    for (int64_t c = 0; c < nc; ++c) {
      const double t = a.theta(c);
      const double cx = std::cos(a.xi[c]);
      jd[c] = cx * (-std::cos(t) * H_omega[0][c] - std::sin(t) * H_omega[1][c]);
    }
    DiscreteOperator J = stencil_plus_diag(*mask_, S, std::move(jd), true);
    SolveOpts so;
    so.tol = p.linear_tol;
    solve_linear(J, r, delta, so);

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 14; ++ls) {
      phi_try = a.phi;
      kernels::axpy(step, delta.data(), phi_try.data(), nc);
      residual(phi_try, r_try);
      const double rt = mask_->nrm_omega(r_try);
      if (rt <= (1.0 - 1e-4 * step) * rn || rt <= tol) {
        a.phi = phi_try;
        rn = rt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    trace << " it" << it << ":r=" << rn;
    if (!accepted)
      throw SolveError("theta Newton: line search stalled;" + trace.str(), rn,
                       it);
  }
  if (rn > tol)
    throw SolveError("theta Newton: no convergence;" + trace.str(), rn, 40);
}

void SteadyContext::solve_theta_given(AngleField& a,
                                      const Vec3Field& H_omega,
                                      const SolverParams& p) const {
  newton_theta(a, H_omega, p);
}

Field SteadyContext::solve_xi(const AngleField& theta_state,
                              const Vec3Field& H_omega, const SolverParams& p,
                              double* bracket_c) const {
  const int64_t nc = mask_->n_cells();
  if (p.lambda < p.lambda_min)
    throw ConfigError("solve_xi: lambda below the configured floor");
  auto S = divform_stencil(*mask_, nullptr);
  const Vec3Field gth = theta_gradient(theta_state, bdata_);

  Field gt2(nc), ct(nc), st(nc);
  double C = 0.0;
  for (int64_t c = 0; c < nc; ++c) {
    gt2[c] = gth[0][c] * gth[0][c] + gth[1][c] * gth[1][c] +
             gth[2][c] * gth[2][c];
    const double t = theta_state.theta(c);
    ct[c] = std::cos(t);
    st[c] = std::sin(t);
    const double Hn = std::hypot(H_omega[0][c], H_omega[1][c], H_omega[2][c]);
    C = std::max(C, 0.5 * gt2[c] + Hn);
  }
  if (bracket_c) *bracket_c = C;

  Field xi(nc, 0.0);
  auto residual = [&](const Field& x, Field& r) {
    r.assign(nc, 0.0);
    kernels::stencil_apply(*S, x.data(), r.data());
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < nc; ++c) {
      const double cx = std::cos(x[c]), sx = std::sin(x[c]);
      const double uxi_H = -sx * ct[c] * H_omega[0][c] -
                           sx * st[c] * H_omega[1][c] + cx * H_omega[2][c];
      r[c] += -(p.lambda - 0.5 * gt2[c]) * std::sin(2.0 * x[c]) + uxi_H;
    }
  };

  const double tol = std::max(0.02 * p.fixed_point_tol, 1e-14);
  Field r(nc), delta(nc), xi_try(nc), r_try(nc);
  residual(xi, r);
  double rn = mask_->nrm_omega(r);
  for (int it = 0; it < 40 && rn > tol; ++it) {
    Field jd(nc);
    for (int64_t c = 0; c < nc; ++c) {
      const double cx = std::cos(xi[c]), sx = std::sin(xi[c]);
      const double uxixi_H = -cx * ct[c] * H_omega[0][c] -
                             cx * st[c] * H_omega[1][c] - sx * H_omega[2][c];
      jd[c] = -2.0 * (p.lambda - 0.5 * gt2[c]) * std::cos(2.0 * xi[c]) +
              uxixi_H;
    }
    DiscreteOperator J = stencil_plus_diag(*mask_, S, std::move(jd), true);
    SolveOpts so;
    so.tol = p.linear_tol;
    solve_linear(J, r, delta, so);

    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 14; ++ls) {
      xi_try = xi;
      kernels::axpy(step, delta.data(), xi_try.data(), nc);
      residual(xi_try, r_try);
      const double rt = mask_->nrm_omega(r_try);
      if (rt <= (1.0 - 1e-4 * step) * rn || rt <= tol) {
        xi = xi_try;
        rn = rt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw SolveError("xi Newton: line search stalled", rn, it);
    const double xmax = kernels::max_abs(xi.data(), nc);
    if (xmax > kChartGuard)
      throw ChartError("xi solve: latitude reached the chart guard");
  }
  if (rn > tol) throw SolveError("xi Newton: no convergence", rn, 40);

  const double xmax = kernels::max_abs(xi.data(), nc);
  if (xmax > 2.0 * C / p.lambda + 1e-12)
    throw SolveError(
        "xi solve: sub/supersolution bracket violated (lambda below the "
        "regime); sup|xi|=" +
            std::to_string(xmax) + " bound=" + std::to_string(2.0 * C / p.lambda),
        xmax, 0);
  return xi;
}

int SteadyContext::solve_theta_v(AngleField& a, DemagCompact& H, double tol,
                                 const SolverParams& p) const {
  double prev = 0.0;
  int worse = 0;
  for (int sweep = 1; sweep <= p.max_iters; ++sweep) {
    DemagCompact H_new = demag_of(a);
    const double r_maxwell = h_norm(*mask_, H_new.H_omega, H.H_omega);
    H = std::move(H_new);
    newton_theta(a, H.H_omega, p);
    if (r_maxwell <= tol && sweep >= 2) return sweep;
    if (sweep > 1 && r_maxwell >= prev) {
      if (++worse >= 5)
        throw SolveError(
            "theta/field alternation: no contraction over 5 sweeps "
            "(|Omega| = " +
                std::to_string(mask_->volume) + " may exceed the smallness "
                "regime)",
            r_maxwell, sweep);
    } else {
      worse = 0;
    }
    prev = r_maxwell;
  }
  throw SolveError("theta/field alternation: iteration cap", prev,
                   p.max_iters);
}

LimitState SteadyContext::solve_limit(const SolverParams& p,
                                      const Field* phi_init) const {
  p.validate();
  LimitState out;
  out.angles = make_angles();
  if (phi_init) out.angles.phi = *phi_init;
  DemagCompact H = zero_demag();
  out.iterations = solve_theta_v(out.angles, H, p.fixed_point_tol, p);
  Field r_th, r_xi;
  core_residuals(out.angles, H.H_omega, p.lambda, r_th, r_xi);
  out.residual = mask_->nrm_omega(r_th);
  out.demag = std::move(H);
  out.demag_full = demag_enabled_ ? demag_->solve(assemble_u(out.angles))
                                  : DemagField{};
  if (!loop_.empty() &&
      winding_number(theta_values(out.angles), loop_) != bdata_.winding)
    throw InternalError("limit solve changed the winding class");
  return out;
}

namespace {

void blend(DemagCompact& H, const DemagCompact& Hbar, double omega) {
  const int64_t n = static_cast<int64_t>(H.v_omega.size());
  for (int64_t i = 0; i < n; ++i)
    H.v_omega[i] = (1 - omega) * H.v_omega[i] + omega * Hbar.v_omega[i];
  for (int d = 0; d < 3; ++d)
    for (int64_t i = 0; i < n; ++i)
      H.H_omega[d][i] =
          (1 - omega) * H.H_omega[d][i] + omega * Hbar.H_omega[d][i];
  H.field_energy = (1 - omega) * H.field_energy + omega * Hbar.field_energy;
}

}  // namespace

SteadyState SteadyContext::fixed_point(const SolverParams& p,
                                       const Field* phi_init,
                                       const SteadyState* warm) const {
  p.validate();
  AngleField a;
  DemagCompact H;
  if (warm) {
    a = warm->angles;
    H = demag_of(a);
  } else {
    LimitState limit = solve_limit(p, phi_init);
    a = std::move(limit.angles);
    H = std::move(limit.demag);
  }
  double omega = p.relaxation;
  double bracket_c = 0.0;
  double prev_total = 1e300;
  int streak = 0;
  std::ostringstream trace;

  SteadyState out;
  const double tol = p.fixed_point_tol;
  bool converged = false;
  int outer = 0;
  for (outer = 1; outer <= p.max_iters; ++outer) {
    a.xi = solve_xi(a, H.H_omega, p, &bracket_c);

    AngleField abar = a;
    DemagCompact Hbar = H;
    solve_theta_v(abar, Hbar, 0.3 * tol, p);

    if (omega >= 1.0) {
      a.phi = std::move(abar.phi);
      H = std::move(Hbar);
    } else {
      for (int64_t c = 0; c < mask_->n_cells(); ++c)
        a.phi[c] = (1 - omega) * a.phi[c] + omega * abar.phi[c];
      blend(H, Hbar, omega);
    }

    DemagCompact H_true = demag_of(a);
    out.r_maxwell = h_norm(*mask_, H_true.H_omega, H.H_omega);
    Field r_th, r_xi;
    core_residuals(a, H.H_omega, p.lambda, r_th, r_xi);
    out.r_theta = mask_->nrm_omega(r_th);
    out.r_xi = mask_->nrm_omega(r_xi);
    const double total = out.r_theta + out.r_xi + out.r_maxwell;
    trace << " [" << outer << "] " << total;
    if (!(total < 1e30) || std::isnan(total))
      throw InternalError("fixed point: residual became non-finite");

    if (out.r_theta <= tol && out.r_xi <= tol && out.r_maxwell <= tol) {
      converged = true;
      break;
    }
    if (total >= prev_total) {
      omega = std::max(omega * 0.5, 1.0 / 32.0);
      streak = 0;
    } else if (++streak >= 3) {
      omega = std::min(p.relaxation, 2.0 * omega);
    }
    prev_total = total;
  }
  if (!converged)
    throw SolveError("fixed point: no convergence; residual trace:" +
                         trace.str(),
                     prev_total, p.max_iters);

  const double xmax = kernels::max_abs(a.xi.data(), a.n_cells());
  if (xmax > kChartGuard)
    throw ChartError("fixed point: latitude reached the chart guard");
  if (!loop_.empty() &&
      winding_number(theta_values(a), loop_) != bdata_.winding)
    throw InternalError("fixed point changed the winding class");

  out.angles = std::move(a);
  out.lambda = p.lambda;
  out.iterations = outer;
  out.bracket_constant = bracket_c;
  out.demag = demag_enabled_ ? demag_->solve(assemble_u(out.angles))
                             : DemagField{};
  out.energy_value =
      energy(out.angles, bdata_, demag_enabled_ ? &out.demag : nullptr, p);
  return out;
}

SweepResult SteadyContext::lambda_sweep(
    const SolverParams& p, const std::vector<double>& lambdas) const {
  if (lambdas.empty()) throw ConfigError("sweep: empty lambda schedule");
  SweepResult res;
  res.limit = solve_limit(p);
  for (double lam : lambdas) {
    SolverParams pl = p;
    pl.lambda = lam;
    SteadyState st = fixed_point(pl);
    SweepRow row;
    row.lambda = lam;
    row.xi_sup = kernels::max_abs(st.angles.xi.data(), st.angles.n_cells());
    row.xi_l2 = mask_->nrm_omega(st.angles.xi);
    Field dphi(mask_->n_cells());
    for (int64_t c = 0; c < mask_->n_cells(); ++c)
      dphi[c] = st.angles.phi[c] - res.limit.angles.phi[c];
    row.theta_dist_l2 = mask_->nrm_omega(dphi);
    row.gradv_dist_l2 = demag_enabled_
                            ? grad_v_distance(st.demag, res.limit.demag_full)
                            : 0.0;
    row.energy = st.energy_value.total();
    row.outer_iters = st.iterations;
    row.r_xi = st.r_xi;
    row.r_theta = st.r_theta;
    row.r_maxwell = st.r_maxwell;
    res.rows.push_back(row);
    res.states.push_back(std::move(st));
  }
  return res;
}

double holder_quotient(const DomainMask& mask, const Field& f, double alpha,
                       int samples, uint64_t seed) {
  const int64_t nc = mask.n_cells();
  const double h = mask.grid.h();
  double q = 0.0;
  for (int64_t c = 0; c < nc; ++c)
    for (int d = 0; d < 6; d += 2) {
      const int32_t nb = mask.neighbor[c][d];
      if (nb >= 0)
        q = std::max(q, std::fabs(f[c] - f[nb]) / std::pow(h, alpha));
    }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int64_t> pick(0, nc - 1);
  for (int s = 0; s < samples; ++s) {
    const int64_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    const double dx = mask.cx(a) - mask.cx(b), dy = mask.cy(a) - mask.cy(b),
                 dz = mask.cz(a) - mask.cz(b);
    const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    q = std::max(q, std::fabs(f[a] - f[b]) / std::pow(dist, alpha));
  }
  return q;
}

double grad_v_distance(const DemagField& a, const DemagField& b) {
  if (a.v.empty() || b.v.empty())
    throw ConfigError("grad_v_distance: full-box fields required");
  const int64_t n = static_cast<int64_t>(a.v.size());
  const double h = a.mask->grid.h();
  double s = 0.0;
  for (int64_t i = 0; i < n; ++i)
    s += (a.v[i] - b.v[i]) * (a.charge[i] - b.charge[i]);
  return std::sqrt(std::max(0.0, -s * h * h * h));
}

}  // namespace magsteady
