// magsteady — steady states, spectra, and relaxation dynamics of a
// magnetization model on voxelized tori.
#include <CLI11.hpp>

#include "magsteady/dynamics.hpp"
#include "magsteady/io.hpp"
#include "magsteady/kernels.hpp"
#include "magsteady/report.hpp"
#include "magsteady/spectrum.hpp"

#include <chrono>
#include <iostream>
#include <random>

using namespace magsteady;

namespace {

using Clock = std::chrono::steady_clock;

double secs(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void record_config(Manifest& man, const RunConfig& cfg) {
  man.note("geometry.R", cfg.R);
  man.note("geometry.r", cfg.r);
  man.note("geometry.box_side", cfg.box_side);
  man.note("geometry.cells", static_cast<double>(cfg.cells));
  man.note("boundary.winding", static_cast<double>(cfg.winding));
  man.note("boundary.perturbation", cfg.boundary_perturbation);
  man.note("solver.lambda", cfg.params.lambda);
  man.note("solver.gamma", cfg.params.gamma);
  man.note("solver.linear_tol", cfg.params.linear_tol);
  man.note("solver.fixed_point_tol", cfg.params.fixed_point_tol);
  man.note("solver.relaxation", cfg.params.relaxation);
  man.note("solver.seed", static_cast<double>(cfg.params.seed));
  man.note("toggles.demag", cfg.demag_on ? "on" : "off");
  man.note("toggles.coupling", cfg.coupling_on ? "on" : "off");
  std::string ls;
  for (double l : cfg.lambdas) ls += (ls.empty() ? "" : ",") + std::to_string(l);
  man.note("sweep.lambdas", ls);
}

SteadyContext make_context(const RunConfig& cfg,
                           std::shared_ptr<const DomainMask>* mask_out) {
  auto mask = std::make_shared<const DomainMask>(
      build_torus_mask(cfg.R, cfg.r, {cfg.box_side, cfg.cells}));
  if (mask_out) *mask_out = mask;
  BoundaryData bd =
      make_boundary_data(*mask, cfg.winding, cfg.boundary_perturbation);
  return SteadyContext(mask, bd, cfg.demag_on);
}

int cmd_demag_check(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "demag-check");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  auto ball = std::make_shared<const DomainMask>(
      build_ball_mask(0.25 * cfg.box_side, {cfg.box_side, cfg.cells}));
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
        0.2 * cfg.box_side)
      continue;
    hz += out.H_omega[2][c];
    ++cnt;
  }
  hz /= static_cast<double>(cnt);
  const double pairing = demag_pairing(*ball, m, out.H_omega);
  const double id_err = std::fabs(out.field_energy - pairing) /
                        std::max(std::fabs(pairing), 1e-300);
  const double margin =
      std::sqrt(ball->volume) - std::sqrt(std::max(out.field_energy, 0.0));
  std::cout << "demag factor (interior mean H_z): " << hz << "\n"
            << "energy identity relative error:   " << id_err << "\n"
            << "L2 bound margin:                  " << margin << "\n";
  write_csv(man.path("demag_check.csv"),
            "demag_factor,energy_identity_err,l2_bound_margin",
            {{hz, id_err, margin}});
  man.timing("demag_check", secs(t0));
  man.write();
  return 0;
}

int cmd_limit(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "limit");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  std::shared_ptr<const DomainMask> mask;
  SteadyContext ctx = make_context(cfg, &mask);
  LimitState limit = ctx.solve_limit(cfg.params);
  std::cout << "limit solve: residual " << limit.residual << " in "
            << limit.iterations << " sweeps\n";
  export_mask(*mask, man.path("mask.txt"), cfg.R, cfg.r);
  write_field_snapshot(man.path("limit_state.csv"), limit.angles);
  man.timing("limit", secs(t0));
  man.write();
  return 0;
}

int cmd_steady(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "steady");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  SteadyContext ctx = make_context(cfg, nullptr);
  SteadyState st = ctx.fixed_point(cfg.params);
  std::cout << "steady state at lambda " << st.lambda << ": residuals (xi "
            << st.r_xi << ", theta " << st.r_theta << ", maxwell "
            << st.r_maxwell << "), energy " << st.energy_value.total()
            << ", outer iterations " << st.iterations << "\n";
  write_field_snapshot(man.path("steady_state.csv"), st.angles);
  write_csv(man.path("steady_summary.csv"),
            "lambda,energy,r_xi,r_theta,r_maxwell,outer_iters",
            {{st.lambda, st.energy_value.total(), st.r_xi, st.r_theta,
              st.r_maxwell, static_cast<double>(st.iterations)}});
  man.timing("steady", secs(t0));
  man.write();
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "sweep");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  SteadyContext ctx = make_context(cfg, nullptr);
  SweepResult res = ctx.lambda_sweep(cfg.params, cfg.lambdas);
  std::vector<std::vector<double>> rows;
  std::vector<double> ll, ls;
  for (const SweepRow& r : res.rows) {
    rows.push_back({r.lambda, r.xi_sup, r.xi_l2, r.theta_dist_l2,
                    r.gradv_dist_l2, r.energy,
                    static_cast<double>(r.outer_iters), r.r_xi, r.r_theta,
                    r.r_maxwell});
    ll.push_back(std::log(r.lambda));
    ls.push_back(std::log(r.xi_sup));
  }
  write_csv(man.path("sweep.csv"),
            "lambda,xi_sup,xi_l2,theta_dist_l2,gradv_dist_l2,energy,"
            "outer_iters,r_xi,r_theta,r_maxwell",
            rows);
  write_gnuplot_script(man.path("sweep.gp"), "sweep.csv", {"2", "4", "5"},
                       true);
  const LinFit fit = linear_fit(ll, ls);
  std::cout << "sweep of " << res.rows.size()
            << " points; fitted sup|xi| slope " << fit.slope << " (r2 "
            << fit.r2 << ")\n";
  int idx = 0;
  for (const SteadyState& st : res.states) {
    if (cfg.snapshot_cadence > 0 && idx % cfg.snapshot_cadence == 0)
      write_field_snapshot(
          man.path("steady_lambda" + std::to_string(st.lambda) + ".csv"),
          st.angles);
    ++idx;
  }
  man.note("fitted_xi_sup_slope", fit.slope);
  man.timing("sweep", secs(t0));
  man.write();
  return 0;
}

int cmd_evolve(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "evolve");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  SteadyContext ctx = make_context(cfg, nullptr);
  SteadyState st = ctx.fixed_point(cfg.params);
  AngleField init =
      perturb_state(st, cfg.epsilon, cfg.params.seed + 1000);
  SolverParams p = cfg.params;
  const double dt =
      cfg.dt_safety * dt_max(ctx.mask().grid.h(), p.lambda, p.gamma);
  DecayRecord rec = evolve_to_steady(ctx, init, st, p, cfg.T_max, dt);
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < rec.t.size(); ++i)
    rows.push_back({rec.t[i], rec.distance[i], rec.energy[i]});
  write_csv(man.path("decay.csv"), "t,distance,energy", rows);
  write_gnuplot_script(man.path("decay.gp"), "decay.csv", {"2"}, false);
  DecayFit fit = fit_decay_rate(rec.t, rec.distance);
  std::cout << "evolve: " << rec.steps << " steps, dt " << rec.dt
            << ", decayed " << (rec.decayed ? "yes" : "no") << ", rate "
            << fit.rate << " (r2 " << fit.fit_quality << ")\n";
  man.note("dt", rec.dt);
  man.note("gamma", p.gamma);
  man.note("lambda", p.lambda);
  man.note("seed", static_cast<double>(cfg.params.seed));
  man.note("fitted_rate", fit.rate);
  man.timing("evolve", secs(t0));
  man.write();
  return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "spectrum");
  record_config(man, cfg);
  const auto t0 = Clock::now();
  SteadyContext ctx = make_context(cfg, nullptr);
  std::vector<std::vector<double>> rows;
  for (double lam : cfg.lambdas) {
    SolverParams p = cfg.params;
    p.lambda = lam;
    SteadyState st = ctx.fixed_point(p);
    LinearizationBlocks blocks(ctx, st, p.gamma);
    SpectrumReport rep = spectral_gap(blocks, cfg.spectrum_k, p);
    TBoundStats tb = tbound_check(blocks, cfg.tbound_beta, cfg.tbound_samples,
                                  cfg.params.seed);
    rows.push_back({lam, p.gamma, rep.eigenvalues[0].real(),
                    rep.eigenvalues[0].imag(), rep.psi_mass[0],
                    rep.residuals[0], tb.max_ratio});
    std::cout << "lambda " << lam << ": gap " << rep.gap << ", psi mass "
              << rep.psi_mass[0] << ", tbound max " << tb.max_ratio << "\n";
  }
  write_csv(man.path("spectrum.csv"),
            "lambda,gamma,re_mu1,im_mu1,psi_mass1,gap_residual,tbound_max",
            rows);
  write_gnuplot_script(man.path("spectrum.gp"), "spectrum.csv", {"3", "5"},
                       true);
  man.timing("spectrum", secs(t0));
  man.write();
  return 0;
}

int cmd_full_report(const RunConfig& cfg) {
  Manifest man(cfg.outdir, "full-report");
  record_config(man, cfg);
  auto results = run_full_report(cfg, std::cout, &man);
  std::cout << "\n=== summary ===\n";
  print_results(results, std::cout);
  return all_pass(results) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "magsteady: steady states of a torus magnetization model, their "
      "spectra, and relaxation dynamics"};
  app.require_subcommand(1);
  std::string config_path, outdir_override;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--out", outdir_override, "output directory override");

  const char* names[] = {"demag-check", "limit",    "steady",     "sweep",
                         "evolve",      "spectrum", "full-report"};
  for (const char* n : names) app.add_subcommand(n);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty()
                        ? RunConfig{}
                        : RunConfig::from_config(Config::from_file(config_path));
    if (config_path.empty()) cfg.validate();
    if (!outdir_override.empty()) cfg.outdir = outdir_override;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "demag-check") return cmd_demag_check(cfg);
    if (cmd == "limit") return cmd_limit(cfg);
    if (cmd == "steady") return cmd_steady(cfg);
    if (cmd == "sweep") return cmd_sweep(cfg);
    if (cmd == "evolve") return cmd_evolve(cfg);
    if (cmd == "spectrum") return cmd_spectrum(cfg);
    if (cmd == "full-report") return cmd_full_report(cfg);
    std::cerr << "unknown command\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "configuration error (geometry): " << e.what() << "\n";
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const ChartError& e) {
    std::cerr << "solver error (chart guard): " << e.what() << "\n";
    return 3;
  } catch (const ResolutionError& e) {
    std::cerr << "solver error (resolution): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
