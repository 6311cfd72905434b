// dynamics.hpp — semi-implicit integration of the damped precession flow in
// (theta, xi) variables with quasi-static field coupling, and decay
// measurement toward steady states.
#pragma once

#include "magsteady/steady.hpp"

namespace magsteady {

struct FlowState {
  AngleField angles;
  double time = 0.0;
  DemagCompact demag;            // field at `angles` (quasi-static)
  bool demag_fresh = false;
  std::vector<std::pair<double, double>> energy_trace;  // (t, E)
};

// stability ceiling for the explicit remainder of the splitting
double dt_max(double h, double lambda, double gamma);

// to-be-integrated right-hand side at (a, H): the theta row and the xi row
void flow_rhs(const SteadyContext& ctx, const AngleField& a,
              const Vec3Field& H_omega, const SolverParams& p, Field& rhs_theta,
              Field& rhs_xi);

// One IMEX step: stiff linear parts (lap xi - 2 lambda xi and
// div(cos^2 xi grad theta)) implicit, the remainder explicit, field
// re-solved at the new state. Throws SolveError when an energy increase at
// gamma = 0 exceeds tolerance, ChartError on chart-guard breach.
void step(const SteadyContext& ctx, FlowState& s, double dt,
          const SolverParams& p);

struct DecayRecord {
  std::vector<double> t, distance, energy;
  bool decayed = false;    // reached the floor or fell by >= 1e2
  bool grew = false;       // distance exceeded twice its starting value
  double dt = 0.0;
  int steps = 0;
};

// Integrate from `initial` until the W^{2,2} distance to `target` reaches
// the floor or t = T_max. dt = 0 picks 0.9 * dt_max.
DecayRecord evolve_to_steady(const SteadyContext& ctx,
                             const AngleField& initial,
                             const SteadyState& target, const SolverParams& p,
                             double T_max, double dt = 0.0,
                             double floor = 1e-8);

struct DecayFit {
  double rate = 0.0;
  double fit_quality = 0.0;  // coefficient of determination
};

// Least-squares slope of log d(t) with the first 10% of samples dropped.
DecayFit fit_decay_rate(const std::vector<double>& t,
                        const std::vector<double>& d);

// discrete W^{2,2} distance of the magnetization fields of two angle states
// (values, first differences, and axial second differences)
double w22_distance(const AngleField& a, const AngleField& b);

// target + a smooth random (phi, xi) perturbation scaled to W^{2,2} size eps
AngleField perturb_state(const SteadyState& target, double eps, uint64_t seed);

}  // namespace magsteady
