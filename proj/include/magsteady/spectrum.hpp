// spectrum.hpp — linearization of the flow about a steady state, leading
// eigenpairs, and the relative-bound witness for the perturbation split.
//
// Sign convention, fixed once: eigenvalues mu are reported for the NEGATED
// linearization, so a positive spectral gap (Re mu_1 > 0) means the steady
// state is linearly stable.
#pragma once

#include "magsteady/pde_core.hpp"
#include "magsteady/steady.hpp"

#include <complex>

namespace magsteady {

struct LinearizationOpts {
  bool demag_coupling = true;   // nonlocal L(u_. ) terms
  bool demag_potential = true;  // multiplication by grad v terms
  bool force_xi_zero = false;   // substitute xi = 0 in every coefficient
};

// Matrix-free actions of the linearized operator A (Jacobian of the flow
// right-hand side in (phi, psi) pair space), of the perturbation part G,
// and of the base part A - G whose eigenvalues carry the gap.
class LinearizationBlocks {
 public:
  LinearizationBlocks(const SteadyContext& ctx, const SteadyState& base,
                      double gamma, LinearizationOpts opts = {});

  int64_t n() const { return n_; }
  int64_t pair_size() const { return 2 * n_; }
  double gamma() const { return gamma_; }
  const SteadyContext& context() const { return *ctx_; }

  void apply_full(const double* in, double* out) const;   // A
  void apply_G(const double* in, double* out) const;      // G
  void apply_base(const double* in, double* out) const;   // A - G
  // base with the nonlocal terms dropped (the eigensolver split)
  void apply_base_local(const double* in, double* out) const;

  // B = -(A - G) as an operator for smallest_eigenpairs
  DiscreteOperator negated_base_operator() const;

  // worst off-symmetry of the gamma = 0 base operator on `samples` random
  // pair fields: max |<Bx,y> - <x,By>| / (|Bx||y| + |x||By|)
  double asymmetry_estimate(int samples, uint64_t seed) const;

 private:
  struct Coeffs;
  std::shared_ptr<const Coeffs> cf_;
  const SteadyContext* ctx_;
  int64_t n_ = 0;
  double gamma_ = 0.0;
  LinearizationOpts opts_;

  enum class Mode { Full, G, Base, BaseLocal };
  void apply_impl(const double* in, double* out, Mode mode) const;
};

struct SpectrumReport {
  std::vector<std::complex<double>> eigenvalues;  // sorted by real part
  double gap = 0.0;                               // Re mu_1
  std::vector<double> psi_mass;                   // int_Omega |psi|^2
  std::vector<double> residuals;
  // eigenvectors normalized by ||phi||^2 + ||psi||^2 = 1 in L2(Omega)
  std::vector<Field> phi_re, phi_im, psi_re, psi_im;
};

SpectrumReport spectral_gap(const LinearizationBlocks& blocks, int k,
                            const SolverParams& p, const EigenOpts* eopts = nullptr);

struct TBoundStats {
  double beta = 0.0;
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

// Empirical witness for ||G x|| <= b ((beta+1)||x|| + ||(beta I - base) x||)
// on random smooth pair fields; one-sided, not a proof.
TBoundStats tbound_check(const LinearizationBlocks& blocks, double beta,
                         int samples, uint64_t seed);

// Scalar eigenproblem of the large-anisotropy limit at (theta_*, v_*),
// negated like the full operator. Reports int_Omega h3^2 as a diagnostic of
// the in-plane field constraint when requested.
DiscreteOperator limit_linearization(const SteadyContext& ctx,
                                     const LimitState& limit, double gamma);

}  // namespace magsteady
