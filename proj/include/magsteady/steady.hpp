// steady.hpp — steady-state construction: the limit solver, the latitude
// map Xi_lambda, the longitude/field map Theta_bar, and the outer fixed
// point Theta_bar(Xi_lambda(.)) whose fixed point is the steady state.
#pragma once

#include "magsteady/field.hpp"
#include "magsteady/maxwell.hpp"
#include "magsteady/pde_core.hpp"

#include <optional>

namespace magsteady {

struct SteadyState {
  AngleField angles;
  DemagField demag;          // full-box field, consistent with angles
  double r_xi = 0.0, r_theta = 0.0, r_maxwell = 0.0;
  EnergyBreakdown energy_value;
  int iterations = 0;
  double lambda = 0.0;
  double bracket_constant = 0.0;  // C = sup(|grad theta|^2/2 + |H|)
};

struct LimitState {
  AngleField angles;         // xi = 0
  DemagCompact demag;
  DemagField demag_full;
  double residual = 0.0;
  int iterations = 0;
};

struct SweepRow {
  double lambda, xi_sup, xi_l2, theta_dist_l2, gradv_dist_l2, energy;
  int outer_iters;
  double r_xi, r_theta, r_maxwell;
};

struct SweepResult {
  LimitState limit;
  std::vector<SteadyState> states;
  std::vector<SweepRow> rows;
};

// Geometry-bound solver context: the mask, the reference angle with its
// per-link unwrapped differences, boundary data, and a demag workspace.
class SteadyContext {
 public:
  SteadyContext(std::shared_ptr<const DomainMask> mask, BoundaryData bdata,
                bool demag_enabled = true);

  const DomainMask& mask() const { return *mask_; }
  std::shared_ptr<const DomainMask> mask_ptr() const { return mask_; }
  std::shared_ptr<const ReferenceAngle> ref() const { return ref_; }
  const BoundaryData& bdata() const { return bdata_; }
  DemagSolver& demag_solver() const { return *demag_; }
  bool demag_enabled() const { return demag_enabled_; }
  const std::vector<int32_t>& winding_loop() const { return loop_; }

  AngleField make_angles() const;
  DemagCompact zero_demag() const;

  // demag of u(theta, xi), identity when the coupling is disabled
  DemagCompact demag_of(const AngleField& a) const;

  // interior residuals of the two steady equations at (a, H):
  //   r_theta = div(cos^2 xi grad theta) + u_theta . H
  //   r_xi    = lap xi - (lambda - |grad theta|^2/2) sin 2xi + u_xi . H
  void core_residuals(const AngleField& a, const Vec3Field& H_omega,
                      double lambda, Field& r_theta, Field& r_xi) const;

  // affine part of div(c^2 grad theta) carried by the winding and the
  // boundary trace (c2 null means c^2 = 1)
  Field theta_affine(const Field* c2, int winding) const;

  LimitState solve_limit(const SolverParams& p,
                         const Field* phi_init = nullptr) const;

  // single longitude solve at frozen (xi, H); Newton with line search
  void solve_theta_given(AngleField& a, const Vec3Field& H_omega,
                         const SolverParams& p) const;

  // Xi_lambda: Newton on the latitude equation at frozen (theta, H);
  // enforces the sub/supersolution bracket |xi| <= 2C/lambda.
  Field solve_xi(const AngleField& theta_state, const Vec3Field& H_omega,
                 const SolverParams& p, double* bracket_c = nullptr) const;

  // Theta_bar: alternate the longitude solve and the field solve at frozen
  // xi until the combined residual drops below tol.
  int solve_theta_v(AngleField& a, DemagCompact& H, double tol,
                    const SolverParams& p) const;

  // phi_init seeds the limit solve; warm (when given) skips the limit solve
  // and enters the outer iteration at the supplied state
  SteadyState fixed_point(const SolverParams& p,
                          const Field* phi_init = nullptr,
                          const SteadyState* warm = nullptr) const;

  SweepResult lambda_sweep(const SolverParams& p,
                           const std::vector<double>& lambdas) const;

 private:
  std::shared_ptr<const DomainMask> mask_;
  std::shared_ptr<const ReferenceAngle> ref_;
  BoundaryData bdata_;
  bool demag_enabled_;
  std::unique_ptr<DemagSolver> demag_;
  std::vector<int32_t> loop_;
  // per cell/dir unwrapped reference-angle increment (to the neighbor center
  // or to the cut-link interface point)
  std::vector<std::array<double, 6>> dref_;
  std::vector<std::array<double, 6>> g0_cut_;  // g0 at cut interfaces

  void newton_theta(AngleField& a, const Vec3Field& H_omega,
                    const SolverParams& p) const;
};

// max over cell pairs of |f(a)-f(b)| / dist^alpha (all adjacent pairs plus
// `samples` random far pairs)
double holder_quotient(const DomainMask& mask, const Field& f, double alpha,
                       int samples, uint64_t seed);

// ||grad(v1 - v2)||_{L2(R^3)} from the defining charges (exact, no tail
// truncation): integral = -<v1-v2, s1-s2> h^3
double grad_v_distance(const DemagField& a, const DemagField& b);

}  // namespace magsteady
