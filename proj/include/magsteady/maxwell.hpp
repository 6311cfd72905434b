// maxwell.hpp — the field operator: given a magnetization supported on the
// mask, solve curl H = 0, div(H + u chi) = 0 on free space.
//
// Realization: the charge s = -div(u chi) is spread on the grid in flux form,
// convolved with the free-space kernel -1/(4 pi |x|) by zero-padded FFT on a
// twice-enlarged box, and H is the centered gradient of the potential. The
// discrete energy identity  int |grad v|^2 = -int_Omega u . grad v  then
// holds to rounding.
#pragma once

#include "magsteady/field.hpp"

#include <memory>

namespace magsteady {

struct DemagField {
  std::shared_ptr<const DomainMask> mask;
  Field v;            // potential on the box grid (N^3), zero mean over Omega
  Vec3Field H;        // grad v on the box grid
  Field charge;       // -div(u chi) on the box grid
  double field_energy = 0.0;  // int_{R^3} |grad v|^2
  // compact restrictions to Omega cells
  Field v_omega;
  Vec3Field H_omega;

  bool empty() const { return v_omega.empty() && v.empty(); }
};

// Restriction of a solve to Omega: all the inner loops need.
struct DemagCompact {
  Field v_omega;
  Vec3Field H_omega;
  double field_energy = 0.0;
};

// Reusable spectral workspace bound to one mask. Not safe for concurrent
// calls on the same instance; make one per thread.
class DemagSolver {
 public:
  explicit DemagSolver(std::shared_ptr<const DomainMask> mask);
  ~DemagSolver();
  DemagSolver(const DemagSolver&) = delete;
  DemagSolver& operator=(const DemagSolver&) = delete;

  // m given per compact cell; the solver applies the cut-cell volume
  // fraction weights internally (u is zero-extended outside Omega).
  DemagField solve(const Vec3Field& m_omega);
  DemagCompact solve_compact(const Vec3Field& m_omega);

  // L applied to the scalar density w along the direction field e.
  DemagField solve_scalar(const Field& w, const Vec3Field& e);
  void solve_scalar_compact(const Field& w, const Vec3Field& e,
                            DemagCompact& out);

  const DomainMask& mask() const { return *mask_; }

  // kernel spectrum extrema, used by the negativity property test
  double spectrum_max() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<const DomainMask> mask_;
};

// One-shot conveniences (they build a workspace per call).
DemagField solve_demag(const Vec3Field& m_omega,
                       std::shared_ptr<const DomainMask> mask);
DemagField apply_L_scalar(const Field& w, const Vec3Field& e,
                          std::shared_ptr<const DomainMask> mask);

// -int_Omega u . grad v with the cut-cell quadrature; the independent side
// of the energy identity.
double demag_pairing(const DomainMask& mask, const Vec3Field& m_omega,
                     const Vec3Field& H_omega);

}  // namespace magsteady
