#include "magsteady/report.hpp"

#include "magsteady/dynamics.hpp"
#include "magsteady/kernels.hpp"
#include "magsteady/spectrum.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace magsteady {

namespace {

using Clock = std::chrono::steady_clock;

double secs(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  Manifest* manifest;
  std::vector<CriterionResult> results;

  // shared heavy artifacts
  std::shared_ptr<const DomainMask> mask;
  std::unique_ptr<SteadyContext> ctx;     // winding 1 reference problem
  SweepResult sweep;
  std::vector<SpectrumReport> spectra;    // gamma = 0, one per sweep point
  double gamma_max = 0.0;
  bool sweep_ok = false;

  void add(const std::string& name, bool pass, const std::string& details) {
    results.push_back({name, pass, details});
    log << (pass ? "PASS " : "FAIL ") << name << ": " << details << "\n";
    log.flush();
  }
};

// --- criterion 1: field operator correctness ------------------------------

void check_maxwell(Context& R) {
  const auto t0 = Clock::now();
  std::ostringstream det;
  bool ok = true;

  // uniformly magnetized ball at N = 64
  {
    auto ball = std::make_shared<const DomainMask>(
        build_ball_mask(0.25 * R.cfg.box_side, {R.cfg.box_side, 64}));
    const int64_t n = ball->n_cells();
    Vec3Field m;
    m[0].assign(n, 0.0);
    m[1].assign(n, 0.0);
    m[2].assign(n, 1.0);
    DemagSolver solver(ball);
    DemagCompact out = solver.solve_compact(m);
    double hz = 0.0;
    int64_t cnt = 0;
    for (int64_t c = 0; c < n; ++c) {
      if (std::hypot(ball->cx(c), ball->cy(c), ball->cz(c)) >
          0.8 * 0.25 * R.cfg.box_side)
        continue;
      hz += out.H_omega[2][c];
      ++cnt;
    }
    hz /= static_cast<double>(cnt);
    const double rel = std::fabs(hz + 1.0 / 3.0) / (1.0 / 3.0);
    ok &= rel <= 0.05;
    det << "ball factor " << fmt(hz) << " (err " << fmt(rel) << ")";
  }

  // energy identity and L2 bound on 20 random unit fields on the torus
  {
    auto mask = std::make_shared<const DomainMask>(
        build_torus_mask(R.cfg.R, R.cfg.r, {R.cfg.box_side, R.cfg.cells}));
    DemagSolver solver(mask);
    const int64_t n = mask->n_cells();
    std::mt19937_64 rng(R.cfg.params.seed);
    std::normal_distribution<double> N01(0.0, 1.0);
    double worst_id = 0.0, worst_margin = 1e300;
    for (int s = 0; s < 20; ++s) {
      Vec3Field m;
      for (int d = 0; d < 3; ++d) {
        m[d].resize(n);
        for (double& v : m[d]) v = N01(rng);
      }
      for (int64_t c = 0; c < n; ++c) {
        const double nr = std::hypot(m[0][c], m[1][c], m[2][c]);
        for (int d = 0; d < 3; ++d) m[d][c] /= nr;
      }
      DemagCompact out = solver.solve_compact(m);
      const double rhs = demag_pairing(*mask, m, out.H_omega);
      worst_id = std::max(
          worst_id, std::fabs(out.field_energy - rhs) /
                        std::max(std::fabs(rhs), 1e-300));
      worst_margin = std::min(
          worst_margin,
          std::sqrt(mask->volume) - std::sqrt(std::max(out.field_energy, 0.0)));
    }
    ok &= worst_id <= 1e-6;
    ok &= worst_margin > 0.0;
    det << "; identity err " << fmt(worst_id) << "; bound margin "
        << fmt(worst_margin);
  }
  if (R.manifest) R.manifest->timing("maxwell_checks", secs(t0));
  R.add("maxwell correctness (ball factor, energy identity, L2 bound)", ok,
        det.str());
}

// --- reference sweep (criteria 2, 4) --------------------------------------

void run_reference_sweep(Context& R) {
  const auto t0 = Clock::now();
  R.mask = std::make_shared<const DomainMask>(
      build_torus_mask(R.cfg.R, R.cfg.r, {R.cfg.box_side, R.cfg.cells}));
  BoundaryData bd =
      make_boundary_data(*R.mask, R.cfg.winding, R.cfg.boundary_perturbation);
  R.ctx = std::make_unique<SteadyContext>(R.mask, bd, R.cfg.demag_on);
  R.sweep = R.ctx->lambda_sweep(R.cfg.params, R.cfg.lambdas);
  R.sweep_ok = true;
  if (R.manifest) {
    std::vector<std::vector<double>> rows;
    for (const SweepRow& r : R.sweep.rows)
      rows.push_back({r.lambda, r.xi_sup, r.xi_l2, r.theta_dist_l2,
                      r.gradv_dist_l2, r.energy,
                      static_cast<double>(r.outer_iters), r.r_xi, r.r_theta,
                      r.r_maxwell});
    const std::string csv = R.manifest->path("sweep.csv");
    write_csv(csv,
              "lambda,xi_sup,xi_l2,theta_dist_l2,gradv_dist_l2,energy,"
              "outer_iters,r_xi,r_theta,r_maxwell",
              rows);
    write_gnuplot_script(R.manifest->path("sweep.gp"), "sweep.csv",
                         {"2", "4", "5"}, true);
    R.manifest->timing("reference_sweep", secs(t0));
  }
}

void check_xi_scaling(Context& R) {
  std::ostringstream det;
  bool ok = true;
  std::vector<double> ll, ls, lh;
  std::vector<std::vector<double>> xrows;
  for (size_t i = 0; i < R.sweep.rows.size(); ++i) {
    const SweepRow& row = R.sweep.rows[i];
    const SteadyState& st = R.sweep.states[i];
    ll.push_back(std::log(row.lambda));
    ls.push_back(std::log(row.xi_sup));
    const double hq = holder_quotient(*R.mask, st.angles.xi, 0.5, 20000,
                                      R.cfg.params.seed + i);
    lh.push_back(std::log(hq));
    // the runtime bracket: solve_xi would have thrown on violation; record
    // the margin sup|xi| <= 2C/lambda
    const double bound = 2.0 * st.bracket_constant / row.lambda;
    ok &= row.xi_sup <= bound;
    xrows.push_back({row.lambda, row.xi_sup, hq, st.bracket_constant, bound});
  }
  const LinFit sup_fit = linear_fit(ll, ls);
  const LinFit hq_fit = linear_fit(ll, lh);
  const bool sup_ok = std::fabs(sup_fit.slope + 1.0) <= 0.15;
  const bool hq_ok = hq_fit.slope >= -1.1 && hq_fit.slope <= -0.4;
  ok &= sup_ok && hq_ok;
  det << "sup|xi| slope " << fmt(sup_fit.slope) << " (target -1.0 +/- 0.15)"
      << "; Holder slope " << fmt(hq_fit.slope) << " (window [-1.1, -0.4])"
      << "; bracket margins held";
  if (R.manifest)
    write_csv(R.manifest->path("xi_scaling.csv"),
              "lambda,xi_sup,holder_quotient,bracket_C,bracket_bound", xrows);
  R.add("xi scaling over the lambda sweep", ok, det.str());
}

void check_limit_convergence(Context& R) {
  bool ok = true;
  std::ostringstream det;
  const auto& rows = R.sweep.rows;
  for (size_t i = 1; i < rows.size(); ++i) {
    ok &= rows[i].theta_dist_l2 < rows[i - 1].theta_dist_l2;
    if (R.cfg.demag_on) ok &= rows[i].gradv_dist_l2 < rows[i - 1].gradv_dist_l2;
  }
  ok &= rows.back().theta_dist_l2 <= 0.1 * rows.front().theta_dist_l2;
  if (R.cfg.demag_on)
    ok &= rows.back().gradv_dist_l2 <= 0.1 * rows.front().gradv_dist_l2;
  det << "theta dist " << fmt(rows.front().theta_dist_l2) << " -> "
      << fmt(rows.back().theta_dist_l2) << "; grad v dist "
      << fmt(rows.front().gradv_dist_l2) << " -> "
      << fmt(rows.back().gradv_dist_l2);
  R.add("limit convergence along the sweep", ok, det.str());
}

// --- criterion 3: homotopy preservation -----------------------------------

void check_homotopy(Context& R) {
  bool ok = true;
  std::ostringstream det;
  const auto t0 = Clock::now();
  for (int w : {0, 1, 2}) {
    // nonconstant trace for the winding-0 case
    const double perturb = w == R.cfg.winding ? R.cfg.boundary_perturbation
                           : w == 0           ? 0.3
                                              : 0.0;
    std::unique_ptr<SteadyContext> ctx;
    const SweepResult* sweep = nullptr;
    SweepResult local;
    if (w == R.cfg.winding && R.sweep_ok) {
      sweep = &R.sweep;
      ctx = nullptr;
    } else {
      BoundaryData bd = make_boundary_data(*R.mask, w, perturb);
      ctx = std::make_unique<SteadyContext>(R.mask, bd, R.cfg.demag_on);
      local = ctx->lambda_sweep(R.cfg.params, R.cfg.lambdas);
      sweep = &local;
    }
    const SteadyContext& use = ctx ? *ctx : *R.ctx;
    for (const SteadyState& st : sweep->states) {
      Field theta(st.angles.n_cells());
      for (int64_t c = 0; c < st.angles.n_cells(); ++c)
        theta[c] = st.angles.theta(c);
      const int got = winding_number(theta, use.winding_loop());
      ok &= got == w;
      if (got != w) det << " [w=" << w << " got " << got << "]";
    }
    det << " w=" << w << " ok;";
  }
  if (R.manifest) R.manifest->timing("homotopy_sweeps", secs(t0));
  R.add("homotopy class preserved exactly (w in {0, 1, 2})", ok, det.str());
}

// --- criterion 5: uniqueness probe -----------------------------------------

void check_uniqueness(Context& R) {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  std::mt19937_64 rng(R.cfg.params.seed + 99);
  for (size_t i = 0; i < R.sweep.states.size(); ++i) {
    SolverParams p = R.cfg.params;
    p.lambda = R.sweep.rows[i].lambda;
    Field init = smooth_random_field(*R.mask, rng);
    for (double& v : init) v *= 0.1;
    SteadyState alt = R.ctx->fixed_point(p, &init);
    Field diff(R.mask->n_cells());
    for (int64_t c = 0; c < R.mask->n_cells(); ++c)
      diff[c] = alt.angles.phi[c] - R.sweep.states[i].angles.phi[c];
    const double dist = R.mask->nrm_omega(diff);
    worst = std::max(worst, dist);
    ok &= dist < 10.0 * p.fixed_point_tol;
  }
  if (R.manifest) R.manifest->timing("uniqueness_probe", secs(t0));
  R.add("uniqueness probe (two initializations)", ok,
        "max L2 distance " + fmt(worst) + " < " +
            fmt(10.0 * R.cfg.params.fixed_point_tol));
}

// --- criterion 6 + 7: spectral gap, limit match, psi mass ------------------

void check_spectrum(Context& R) {
  const auto t0 = Clock::now();
  bool gap_ok = true;
  std::ostringstream det;
  std::vector<std::vector<double>> csv_rows;

  R.spectra.clear();
  for (size_t i = 0; i < R.sweep.states.size(); ++i) {
    LinearizationBlocks blocks(*R.ctx, R.sweep.states[i], 0.0);
    SpectrumReport rep = spectral_gap(blocks, R.cfg.spectrum_k, R.cfg.params);
    gap_ok &= rep.gap > 0.0;
    TBoundStats tb =
        tbound_check(blocks, R.cfg.tbound_beta,
                     std::min(R.cfg.tbound_samples, 6), R.cfg.params.seed + i);
    csv_rows.push_back({R.sweep.rows[i].lambda, 0.0, rep.eigenvalues[0].real(),
                        rep.eigenvalues[0].imag(), rep.psi_mass[0],
                        rep.residuals[0], tb.max_ratio});
    R.spectra.push_back(std::move(rep));
  }
  det << "gamma=0 gaps ";
  for (const auto& rep : R.spectra) det << fmt(rep.gap) << " ";

  // largest empirically stable gamma from the ladder, judged at the largest
  // lambda, then verified across the sweep
  const SteadyState& top = R.sweep.states.back();
  R.gamma_max = 0.0;
  for (double g : R.cfg.gammas) {
    if (g == 0.0) continue;
    LinearizationBlocks blocks(*R.ctx, top, g);
    SpectrumReport rep = spectral_gap(blocks, R.cfg.spectrum_k, R.cfg.params);
    if (rep.gap > 0.0) R.gamma_max = std::max(R.gamma_max, g);
  }
  bool gamma_ok = true;
  if (R.gamma_max > 0.0) {
    for (size_t i = 0; i < R.sweep.states.size(); ++i) {
      LinearizationBlocks blocks(*R.ctx, R.sweep.states[i], R.gamma_max);
      SpectrumReport rep = spectral_gap(blocks, R.cfg.spectrum_k, R.cfg.params);
      gamma_ok &= rep.gap > 0.0;
      csv_rows.push_back({R.sweep.rows[i].lambda, R.gamma_max,
                          rep.eigenvalues[0].real(), rep.eigenvalues[0].imag(),
                          rep.psi_mass[0], rep.residuals[0], 0.0});
    }
  }
  det << "; gamma_max " << fmt(R.gamma_max);

  // decoupled box diagnostic: psi-branch bottom = 2 lambda + 3 pi^2 / L^2
  bool box_ok = true;
  {
    const double lam = R.cfg.lambdas.back();
    const double L = R.cfg.box_side * 45.0 / 48.0;
    auto boxmask = std::make_shared<const DomainMask>(
        build_box_mask(L, {R.cfg.box_side, R.cfg.cells}));
    BoundaryData bd0 = make_boundary_data(*boxmask, 0, 0.0);
    SteadyContext bctx(boxmask, bd0, /*demag_enabled=*/false);
    SteadyState synth;
    synth.angles = bctx.make_angles();
    synth.lambda = lam;
    LinearizationOpts lo;
    lo.demag_coupling = false;
    lo.demag_potential = false;
    LinearizationBlocks blocks(bctx, synth, 0.0, lo);
    // psi branch as a scalar operator through the pair action
    const int64_t n = blocks.n();
    DiscreteOperator psiop;
    psiop.size = n;
    psiop.symmetric_hint = true;
    Field pair(2 * n, 0.0), out(2 * n, 0.0);
    auto* bp = &blocks;
    auto pairbuf = std::make_shared<Field>(2 * n, 0.0);
    auto outbuf = std::make_shared<Field>(2 * n, 0.0);
    psiop.action = [bp, n, pairbuf, outbuf](const double* x, double* y) {
      std::fill(pairbuf->begin(), pairbuf->end(), 0.0);
      std::copy(x, x + n, pairbuf->begin() + n);
      bp->apply_base(pairbuf->data(), outbuf->data());
      for (int64_t i = 0; i < n; ++i) y[i] = -(*outbuf)[i + n];
    };
    EigenOpts eo;
    eo.tol = R.cfg.params.eigen_tol;
    eo.shift = 2.0 * lam;
    eo.seed = R.cfg.params.seed;
    eo.block = 5;
    auto pairs = smallest_eigenpairs(psiop, 1, eo);
    const double expect =
        2.0 * lam + 3.0 * std::numbers::pi * std::numbers::pi / (L * L);
    const double rel = std::fabs(pairs[0].value.real() - expect) / expect;
    box_ok = rel <= 0.02;
    det << "; box diag err " << fmt(rel);
  }

  // phi-branch vs the limit eigenproblem at the largest lambda
  bool limit_ok = true;
  {
    DiscreteOperator Blim =
        limit_linearization(*R.ctx, R.sweep.limit, 0.0);
    EigenOpts eo;
    eo.tol = R.cfg.params.eigen_tol;
    eo.seed = R.cfg.params.seed;
    auto lim_pairs = smallest_eigenpairs(Blim, 3, eo);
    const SpectrumReport& full = R.spectra.back();
    int matched = 0;
    double worst = 0.0;
    for (size_t q = 0, j = 0; q < full.eigenvalues.size() && j < 3; ++q) {
      if (full.psi_mass[q] > 0.5) continue;  // psi-branch pair
      const double a = full.eigenvalues[q].real();
      const double b = lim_pairs[j].value.real();
      worst = std::max(worst, std::fabs(a - b) / std::fabs(b));
      ++matched;
      ++j;
    }
    limit_ok = matched >= 2 && worst <= 0.05;
    det << "; limit-match err " << fmt(worst);
  }

  if (R.manifest) {
    write_csv(R.manifest->path("spectrum.csv"),
              "lambda,gamma,re_mu1,im_mu1,psi_mass1,gap_residual,tbound_max",
              csv_rows);
    R.manifest->timing("spectrum", secs(t0));
  }
  R.add("spectral gap positive (gamma = 0 and gamma_max); box and limit "
        "diagnostics",
        gap_ok && gamma_ok && box_ok && limit_ok, det.str());

  // psi-mass scaling
  std::vector<double> ll, lm;
  for (size_t i = 0; i < R.spectra.size(); ++i) {
    ll.push_back(std::log(R.sweep.rows[i].lambda));
    lm.push_back(std::log(std::max(R.spectra[i].psi_mass[0], 1e-300)));
  }
  const LinFit fitpm = linear_fit(ll, lm);
  R.add("psi-mass scaling exponent <= -0.8", fitpm.slope <= -0.8,
        "fitted exponent " + fmt(fitpm.slope));
}

// --- criterion 8: dynamic stability ----------------------------------------

void check_dynamics(Context& R) {
  const auto t0 = Clock::now();
  const SteadyState& target = R.sweep.states.back();
  SolverParams p = R.cfg.params;
  p.lambda = target.lambda;
  p.gamma = 0.0;
  const double gap = R.spectra.back().gap;

  bool ok = true;
  std::ostringstream det;
  int decayed = 0;
  double worst_rate_err = 0.0;
  bool energy_ok = true;
  std::vector<std::vector<double>> decay_rows;
  for (int s = 0; s < R.cfg.n_perturbations; ++s) {
    AngleField init =
        perturb_state(target, R.cfg.epsilon, R.cfg.params.seed + 1000 + s);
    DecayRecord rec = evolve_to_steady(*R.ctx, init, target, p, R.cfg.T_max,
                                       R.cfg.dt_safety *
                                           dt_max(R.mask->grid.h(), p.lambda,
                                                  p.gamma));
    decayed += rec.decayed ? 1 : 0;
    for (size_t i = 1; i < rec.energy.size(); ++i)
      energy_ok &= rec.energy[i] <=
                   rec.energy[i - 1] + 1e-10 * std::fabs(rec.energy[i - 1]);
    DecayFit fit = fit_decay_rate(rec.t, rec.distance);
    worst_rate_err =
        std::max(worst_rate_err, std::fabs(fit.rate - gap) / gap);
    if (s == 0 && R.manifest) {
      for (size_t i = 0; i < rec.t.size(); ++i)
        decay_rows.push_back({rec.t[i], rec.distance[i], rec.energy[i]});
      write_csv(R.manifest->path("decay.csv"), "t,distance,energy",
                decay_rows);
    }
  }
  ok = decayed == R.cfg.n_perturbations && worst_rate_err <= 0.25 && energy_ok;
  det << decayed << "/" << R.cfg.n_perturbations << " decayed; worst rate err "
      << fmt(worst_rate_err) << " vs gap " << fmt(gap) << "; energy monotone "
      << (energy_ok ? "yes" : "no");
  if (R.manifest) R.manifest->timing("dynamics_battery", secs(t0));
  R.add("dynamic stability battery at the largest lambda", ok, det.str());
}

// --- criterion 9: linearization consistency --------------------------------

void check_linearization_fd(Context& R) {
  const SteadyState& base = R.sweep.states.back();
  SolverParams p = R.cfg.params;
  p.lambda = base.lambda;
  p.gamma = R.gamma_max;  // exercise the full operator including gamma terms
  LinearizationBlocks blocks(*R.ctx, base, p.gamma);
  const int64_t n = blocks.n();

  Field rhs_th0, rhs_xi0;
  flow_rhs(*R.ctx, base.angles, base.demag.H_omega, p, rhs_th0, rhs_xi0);

  std::mt19937_64 rng(R.cfg.params.seed + 7);
  bool ok = true;
  std::ostringstream det;
  for (int dir = 0; dir < 5; ++dir) {
    Field dphi = smooth_random_field(*R.mask, rng);
    Field dxi = smooth_random_field(*R.mask, rng);
    Field pair(2 * n), Apair(2 * n);
    std::copy(dphi.begin(), dphi.end(), pair.begin());
    std::copy(dxi.begin(), dxi.end(), pair.begin() + n);
    blocks.apply_full(pair.data(), Apair.data());

    double err_prev = -1.0;
    bool first_order = true;
    for (double eps : {1e-4, 5e-5}) {
      AngleField pa = base.angles;
      for (int64_t c = 0; c < n; ++c) {
        pa.phi[c] += eps * dphi[c];
        pa.xi[c] += eps * dxi[c];
      }
      DemagCompact Hp = R.ctx->demag_of(pa);
      Field rhs_th, rhs_xi;
      flow_rhs(*R.ctx, pa, Hp.H_omega, p, rhs_th, rhs_xi);
      double err = 0.0, scale = 0.0;
      for (int64_t c = 0; c < n; ++c) {
        const double fd_th = (rhs_th[c] - rhs_th0[c]) / eps;
        const double fd_xi = (rhs_xi[c] - rhs_xi0[c]) / eps;
        err += (fd_th - Apair[c]) * (fd_th - Apair[c]) +
               (fd_xi - Apair[n + c]) * (fd_xi - Apair[n + c]);
        scale += Apair[c] * Apair[c] + Apair[n + c] * Apair[n + c];
      }
      err = std::sqrt(err / scale);
      if (err_prev >= 0.0)
        first_order = err <= 0.75 * err_prev || err < 1e-9;
      err_prev = err;
      if (eps == 5e-5) det << fmt(err) << " ";
    }
    ok &= first_order;
  }
  R.add("linearization matches the finite-difference Jacobian (first order)",
        ok, "relative errors at eps=5e-5: " + det.str());
}

}  // namespace

std::vector<CriterionResult> run_full_report(const RunConfig& cfg,
                                             std::ostream& log,
                                             Manifest* manifest) {
  Context R{cfg, log, manifest, {}};
  auto guarded = [&](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      R.add(name, false, std::string("aborted: ") + e.what());
    }
  };
  guarded("maxwell correctness", [&] { check_maxwell(R); });
  guarded("reference sweep", [&] {
    run_reference_sweep(R);
    check_xi_scaling(R);
    check_limit_convergence(R);
  });
  if (R.sweep_ok) {
    guarded("homotopy", [&] { check_homotopy(R); });
    guarded("uniqueness", [&] { check_uniqueness(R); });
    guarded("spectrum", [&] { check_spectrum(R); });
    if (!R.spectra.empty()) {
      guarded("dynamics", [&] { check_dynamics(R); });
      guarded("linearization", [&] { check_linearization_fd(R); });
    }
  }
  if (manifest) manifest->write();
  return std::move(R.results);
}

bool all_pass(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.pass) return false;
  return !results.empty();
}

void print_results(const std::vector<CriterionResult>& results,
                   std::ostream& out) {
  int idx = 1;
  for (const auto& r : results) {
    out << (r.pass ? "PASS" : "FAIL") << " " << idx++ << ". " << r.name
        << ": " << r.details << "\n";
  }
}

}  // namespace magsteady
