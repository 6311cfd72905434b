#include "magsteady/dynamics.hpp"

#include "magsteady/kernels.hpp"

#include <cmath>
#include <random>

namespace magsteady {

double dt_max(double h, double lambda, double gamma) {
  const double eps = 1e-30;
  return std::min({h * h / 6.0, 1.0 / (4.0 * lambda),
                   1.0 / (4.0 * gamma * lambda + eps)});
}

void flow_rhs(const SteadyContext& ctx, const AngleField& a,
              const Vec3Field& H_omega, const SolverParams& p,
              Field& rhs_theta, Field& rhs_xi) {
  Field r_th, r_xi;
  ctx.core_residuals(a, H_omega, p.lambda, r_th, r_xi);
  const int64_t n = a.n_cells();
  rhs_theta.resize(n);
  rhs_xi.resize(n);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < n; ++c) {
    const double cx = std::cos(a.xi[c]);
    rhs_theta[c] = r_th[c] / (cx * cx) - (p.gamma / cx) * r_xi[c];
    rhs_xi[c] = r_xi[c] + (p.gamma / cx) * r_th[c];
  }
}

void step(const SteadyContext& ctx, FlowState& s, double dt,
          const SolverParams& p) {
  const DomainMask& mask = ctx.mask();
  const int64_t n = s.angles.n_cells();
  if (dt > dt_max(mask.grid.h(), p.lambda, p.gamma) * (1.0 + 1e-12))
    throw ConfigError("step: dt exceeds the stability ceiling");

  if (!s.demag_fresh) {
    s.demag = ctx.demag_of(s.angles);
    s.demag_fresh = true;
  }
  // demag part of the energy: -1/2 int u.H = +1/2 * pairing
  const double e_demag_old =
      0.5 * demag_pairing(mask, assemble_u(s.angles), s.demag.H_omega);

  Field r_th, r_xi;
  ctx.core_residuals(s.angles, s.demag.H_omega, p.lambda, r_th, r_xi);

  Field c2(n), lap_xi(n), divc2_phi(n);
  for (int64_t c = 0; c < n; ++c) {
    const double cx = std::cos(s.angles.xi[c]);
    c2[c] = cx * cx;
  }
  auto S_lap = divform_stencil(mask, nullptr);
  auto S_c2 = divform_stencil(mask, &c2);
  kernels::stencil_apply(*S_lap, s.angles.xi.data(), lap_xi.data());
  kernels::stencil_apply(*S_c2, s.angles.phi.data(), divc2_phi.data());

  // theta update: (c^2/dt - div c^2 grad) phi' = c^2 phi/dt + affine
  //   + u_theta.H - gamma cos(xi) * r_xi
  Field rhs(n);
  {
    const Field affine = ctx.theta_affine(&c2, s.angles.winding);
    for (int64_t c = 0; c < n; ++c) {
      const double cx = std::cos(s.angles.xi[c]);
      // r_th = div(c2 grad theta) + u_theta.H; the explicit piece keeps only
      // the non-stiff part
      const double expl = r_th[c] - (divc2_phi[c] + affine[c]);
      rhs[c] = c2[c] * s.angles.phi[c] / dt + expl + affine[c] -
               p.gamma * cx * r_xi[c];
    }
    DiscreteOperator A;
    A.size = n;
    A.symmetric_hint = true;
    A.mask = &mask;
    auto c2p = std::make_shared<Field>(c2);
    A.action = [S_c2, c2p, dt, n](const double* x, double* y) {
      kernels::stencil_apply(*S_c2, x, y);
      for (int64_t i = 0; i < n; ++i) y[i] = (*c2p)[i] * x[i] / dt - y[i];
    };
    SolveOpts so;
    so.tol = p.linear_tol;
    so.x0 = &s.angles.phi;
    Field phi_new(n);
    solve_linear(A, rhs, phi_new, so);
    rhs.swap(phi_new);  // rhs now holds phi_new
  }

  // xi update: (1/dt - lap + 2 lambda) xi' = xi/dt + lambda(2 xi - sin 2 xi)
  //   + (|grad theta|^2/2) sin 2 xi + u_xi.H + (gamma/cos xi) r_th
  Field xi_new(n);
  {
    Field rhs2(n);
    for (int64_t c = 0; c < n; ++c) {
      const double cx = std::cos(s.angles.xi[c]);
      const double expl = r_xi[c] - lap_xi[c] + 2.0 * p.lambda * s.angles.xi[c];
      rhs2[c] = s.angles.xi[c] / dt + expl + (p.gamma / cx) * r_th[c];
    }
    DiscreteOperator A;
    A.size = n;
    A.symmetric_hint = true;
    A.mask = &mask;
    const double shift = 1.0 / dt + 0.0;
    A.action = [S_lap, shift, lam = p.lambda, n](const double* x, double* y) {
      kernels::stencil_apply(*S_lap, x, y);
      for (int64_t i = 0; i < n; ++i)
        y[i] = (shift + 2.0 * lam) * x[i] - y[i];
    };
    SolveOpts so;
    so.tol = p.linear_tol;
    so.x0 = &s.angles.xi;
    solve_linear(A, rhs2, xi_new, so);
  }

  if (kernels::max_abs(xi_new.data(), n) > kChartGuard)
    throw ChartError("step rejected: latitude reached the chart guard");

  AngleField a_new = s.angles;
  a_new.phi = std::move(rhs);
  a_new.xi = std::move(xi_new);
  DemagCompact H_new = ctx.demag_of(a_new);
  const double e_demag_new =
      0.5 * demag_pairing(mask, assemble_u(a_new), H_new.H_omega);
  const double e_new =
      energy(a_new, ctx.bdata(), nullptr, p).total() + e_demag_new;
  const double e_total_old =
      energy(s.angles, ctx.bdata(), nullptr, p).total() + e_demag_old;
  if (p.gamma == 0.0 &&
      e_new > e_total_old + 1e-10 * std::fabs(e_total_old) + 1e-300)
    throw SolveError("step rejected: energy increased at gamma = 0 (dE = " +
                         std::to_string(e_new - e_total_old) + ")",
                     e_new - e_total_old, 0);

  s.angles = std::move(a_new);
  s.demag = std::move(H_new);
  s.demag_fresh = true;
  s.time += dt;
  s.energy_trace.emplace_back(s.time, e_new);
}

double w22_distance(const AngleField& a, const AngleField& b) {
  const DomainMask& mask = *a.mask;
  const GridSpec& g = mask.grid;
  const int64_t n = a.n_cells();
  const double h = g.h();
  const Vec3Field ua = assemble_u(a), ub = assemble_u(b);
  Vec3Field du;
  for (int d = 0; d < 3; ++d) {
    du[d].resize(n);
    for (int64_t c = 0; c < n; ++c) du[d][c] = ua[d][c] - ub[d][c];
  }
  // du extends by zero: both states share the Dirichlet trace
  auto at = [&](int comp, int32_t c, int dir) -> double {
    const int32_t nb = mask.neighbor[c][dir];
    return nb >= 0 ? du[comp][nb] : 0.0;
  };
  double acc = 0.0;
  for (int64_t c = 0; c < n; ++c) {
    for (int comp = 0; comp < 3; ++comp) {
      const double v = du[comp][c];
      acc += v * v;
      for (int axis = 0; axis < 3; ++axis) {
        const double fp = at(comp, static_cast<int32_t>(c), 2 * axis);
        const double fm = at(comp, static_cast<int32_t>(c), 2 * axis + 1);
        const double d1 = (fp - fm) / (2.0 * h);
        const double d2 = (fp - 2.0 * v + fm) / (h * h);
        acc += d1 * d1 + d2 * d2;
      }
    }
  }
  return std::sqrt(acc * h * h * h);
}

DecayRecord evolve_to_steady(const SteadyContext& ctx,
                             const AngleField& initial,
                             const SteadyState& target, const SolverParams& p,
                             double T_max, double dt, double floor) {
  if (dt <= 0.0) dt = 0.9 * dt_max(ctx.mask().grid.h(), p.lambda, p.gamma);
  FlowState s;
  s.angles = initial;
  DecayRecord rec;
  rec.dt = dt;
  const double d0 = w22_distance(s.angles, target.angles);
  rec.t.push_back(0.0);
  rec.distance.push_back(d0);
  rec.energy.push_back(0.0);  // filled after the first step

  while (s.time < T_max) {
    double dt_try = std::min(dt, T_max - s.time);
    int halvings = 0;
    for (;;) {
      try {
        step(ctx, s, dt_try, p);
        break;
      } catch (const SolveError&) {
        if (++halvings > 3) throw;
        dt_try *= 0.5;
      }
    }
    const double d = w22_distance(s.angles, target.angles);
    rec.t.push_back(s.time);
    rec.distance.push_back(d);
    rec.energy.push_back(s.energy_trace.back().second);
    ++rec.steps;
    if (d > 2.0 * d0) rec.grew = true;
    if (d <= floor) break;
  }
  if (!rec.energy.empty() && rec.energy.size() > 1) rec.energy[0] = rec.energy[1];
  const double d_final = rec.distance.back();
  rec.decayed = d_final <= std::max(floor * 1.05, 1e-2 * d0);
  return rec;
}

DecayFit fit_decay_rate(const std::vector<double>& t,
                        const std::vector<double>& d) {
  if (t.size() != d.size()) throw ConfigError("fit: length mismatch");
  const size_t skip = t.size() / 10;
  if (t.size() - skip < 20)
    throw ConfigError("fit: need at least 20 samples past the transient");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  size_t m = 0;
  for (size_t i = skip; i < t.size(); ++i) {
    if (!(d[i] > 0.0))
      throw ConfigError("fit: non-positive distance sample");
    const double x = t[i], y = std::log(d[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    ++m;
  }
  const double det = m * sxx - sx * sx;
  DecayFit fit;
  const double slope = (m * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / m;
  fit.rate = -slope;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / m;
  for (size_t i = skip; i < t.size(); ++i) {
    const double y = std::log(d[i]);
    const double yhat = intercept + slope * t[i];
    ss_res += (y - yhat) * (y - yhat);
    ss_tot += (y - ybar) * (y - ybar);
  }
  fit.fit_quality = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

AngleField perturb_state(const SteadyState& target, double eps,
                         uint64_t seed) {
  const DomainMask& mask = *target.angles.mask;
  std::mt19937_64 rng(seed);
  const Field dphi = smooth_random_field(mask, rng);
  const Field dxi = smooth_random_field(mask, rng);
  const int64_t n = mask.n_cells();

  AngleField out = target.angles;
  double scale = eps;  // refine so that the W22 distance lands near eps
  for (int it = 0; it < 12; ++it) {
    for (int64_t c = 0; c < n; ++c) {
      out.phi[c] = target.angles.phi[c] + scale * dphi[c];
      out.xi[c] = target.angles.xi[c] + scale * dxi[c];
    }
    const double d = w22_distance(out, target.angles);
    if (d <= eps && d >= 0.8 * eps) break;
    scale *= eps / d;
  }
  return out;
}

}  // namespace magsteady
