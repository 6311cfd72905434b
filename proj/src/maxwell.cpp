#include "magsteady/maxwell.hpp"

#include "magsteady/kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

namespace magsteady {

namespace {

std::mutex g_fftw_plan_mutex;  // FFTW planning is not thread-safe

// next size >= n with only factors 2,3,5 (keeps FFTW on fast code paths)
int next_fast(int n) {
  for (;; ++n) {
    int m = n;
    for (int f : {2, 3, 5})
      while (m % f == 0) m /= f;
    if (m == 1) return n;
  }
}

// cell average of 1/|x| over the unit cube; the unit tests re-derive it by
// quadrature
constexpr double kSelfCellAverage = 2.380077363979553;

// charge at a box cell: flux-form divergence of m*chi, zero outside Omega
inline double charge_at(const DomainMask& mask, const Vec3Field& m, int i,
                        int j, int k, double inv2h) {
  const GridSpec& g = mask.grid;
  auto mval = [&](int ii, int jj, int kk, int d) -> double {
    if (ii < 0 || ii >= g.n || jj < 0 || jj >= g.n || kk < 0 || kk >= g.n)
      return 0.0;
    const int32_t c = mask.cell_index[g.lin(ii, jj, kk)];
    return c >= 0 ? m[d][c] : 0.0;
  };
  const double div = (mval(i + 1, j, k, 0) - mval(i - 1, j, k, 0)) +
                     (mval(i, j + 1, k, 1) - mval(i, j - 1, k, 1)) +
                     (mval(i, j, k + 1, 2) - mval(i, j, k - 1, 2));
  return -div * inv2h;
}

// One zero-padded convolution setup: charge window [lo, lo+ext), potential
// window [vlo, vlo+vext) in box-cell coordinates (may stick out of the box).
struct Engine {
  std::array<int, 3> P{}, lo{}, ext{}, vlo{}, vext{};
  std::vector<double> spec;   // kernel spectrum / (Px*Py*Pz)
  std::vector<double> rbuf;
  std::vector<double> cbuf;   // interleaved complex
  std::vector<double> charge_win;
  std::vector<double> v_win;
  fftw_plan fwd = nullptr, bwd = nullptr;

  ~Engine() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }

  int64_t ridx(int i, int j, int k) const {
    return (int64_t(k) * P[1] + j) * P[0] + i;
  }
  int64_t cidx(int i, int j, int k) const {
    return (int64_t(k) * ext[1] + j) * ext[0] + i;
  }
  // index into v_win by box-cell coordinates
  int64_t widx(int i, int j, int k) const {
    return (int64_t(k - vlo[2]) * vext[1] + (j - vlo[1])) * vext[0] +
           (i - vlo[0]);
  }

  void init(const DomainMask& mask, const std::array<int, 3>& charge_lo,
            const std::array<int, 3>& charge_ext,
            const std::array<int, 3>& pot_lo,
            const std::array<int, 3>& pot_ext) {
    lo = charge_lo;
    ext = charge_ext;
    vlo = pot_lo;
    vext = pot_ext;
    for (int d = 0; d < 3; ++d) {
      // the signed displacement between any potential and charge cell must
      // fit in [-P/2, P/2]
      const int reach =
          std::max(vlo[d] + vext[d] - 1 - lo[d], lo[d] + ext[d] - 1 - vlo[d]);
      P[d] = next_fast(2 * (reach + 1));
    }

    const int64_t nreal = int64_t(P[0]) * P[1] * P[2];
    const int64_t ncplx = int64_t(P[0] / 2 + 1) * P[1] * P[2];
    rbuf.assign(nreal, 0.0);
    cbuf.assign(2 * ncplx, 0.0);
    {
      std::lock_guard<std::mutex> lock(g_fftw_plan_mutex);
      // dims reversed: fftw orders the fastest axis last
      fwd = fftw_plan_dft_r2c_3d(P[2], P[1], P[0], rbuf.data(),
                                 reinterpret_cast<fftw_complex*>(cbuf.data()),
                                 FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_3d(P[2], P[1], P[0],
                                 reinterpret_cast<fftw_complex*>(cbuf.data()),
                                 rbuf.data(), FFTW_ESTIMATE);
    }

    const double h = mask.grid.h();
    const double scale = -h * h / (4.0 * std::numbers::pi);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < P[2]; ++k)
      for (int j = 0; j < P[1]; ++j)
        for (int i = 0; i < P[0]; ++i) {
          const int di = i <= P[0] / 2 ? i : i - P[0];
          const int dj = j <= P[1] / 2 ? j : j - P[1];
          const int dk = k <= P[2] / 2 ? k : k - P[2];
          const double r = std::sqrt(double(di) * di + double(dj) * dj +
                                     double(dk) * dk);
          rbuf[ridx(i, j, k)] = r == 0.0 ? scale * kSelfCellAverage : scale / r;
        }
    fftw_execute(fwd);
    spec.resize(ncplx);
    const double inv = 1.0 / static_cast<double>(nreal);
    for (int64_t q = 0; q < ncplx; ++q) spec[q] = cbuf[2 * q] * inv;
    charge_win.assign(int64_t(ext[0]) * ext[1] * ext[2], 0.0);
    v_win.assign(int64_t(vext[0]) * vext[1] * vext[2], 0.0);
  }

  // charge -> potential on the window
  void run(const DomainMask& mask, const Vec3Field& m) {
    const double inv2h = 1.0 / (2.0 * mask.grid.h());
    kernels::fill(0.0, rbuf.data(), static_cast<int64_t>(rbuf.size()));
#pragma omp parallel for schedule(static)
    for (int k = 0; k < ext[2]; ++k)
      for (int j = 0; j < ext[1]; ++j)
        for (int i = 0; i < ext[0]; ++i) {
          const double s =
              charge_at(mask, m, i + lo[0], j + lo[1], k + lo[2], inv2h);
          charge_win[cidx(i, j, k)] = s;
          rbuf[ridx(i, j, k)] = s;
        }
    fftw_execute(fwd);
    kernels::spectral_scale(spec.data(), cbuf.data(),
                            static_cast<int64_t>(spec.size()));
    fftw_execute(bwd);
#pragma omp parallel for schedule(static)
    for (int k = 0; k < vext[2]; ++k)
      for (int j = 0; j < vext[1]; ++j)
        for (int i = 0; i < vext[0]; ++i) {
          const int bi = i + vlo[0] - lo[0];
          const int bj = j + vlo[1] - lo[1];
          const int bk = k + vlo[2] - lo[2];
          const int wi = (bi % P[0] + P[0]) % P[0];
          const int wj = (bj % P[1] + P[1]) % P[1];
          const int wk = (bk % P[2] + P[2]) % P[2];
          v_win[(int64_t(k) * vext[1] + j) * vext[0] + i] =
              rbuf[ridx(wi, wj, wk)];
        }
  }

  // -<v, s> h^3 over the charge support
  double field_energy(double h) const {
    double vs = 0.0;
    for (int k = 0; k < ext[2]; ++k)
      for (int j = 0; j < ext[1]; ++j)
        for (int i = 0; i < ext[0]; ++i)
          vs += v_win[widx(i + lo[0], j + lo[1], k + lo[2])] *
                charge_win[cidx(i, j, k)];
    return -vs * h * h * h;
  }

  double omega_mean(const DomainMask& mask) const {
    double vol = 0.0, vsum = 0.0;
    for (int64_t c = 0; c < mask.n_cells(); ++c) {
      const auto [i, j, k] = mask.cell_ijk[c];
      vol += 1.0;
      vsum += v_win[widx(i, j, k)];
    }
    return vsum / vol;
  }
};

}  // namespace

struct DemagSolver::Impl {
  Engine tight;                   // potential on Omega and the charge shell
  std::unique_ptr<Engine> full;   // potential on the whole box, built lazily
  std::array<int, 3> charge_lo{}, charge_ext{};
};

DemagSolver::DemagSolver(std::shared_ptr<const DomainMask> mask)
    : impl_(std::make_unique<Impl>()), mask_(std::move(mask)) {
  const GridSpec& g = mask_->grid;
  std::array<int, 3> cmin{g.n, g.n, g.n}, cmax{-1, -1, -1};
  for (int64_t c = 0; c < mask_->n_cells(); ++c) {
    const auto& ijk = mask_->cell_ijk[c];
    for (int d = 0; d < 3; ++d) {
      cmin[d] = std::min(cmin[d], ijk[d] - 1);
      cmax[d] = std::max(cmax[d], ijk[d] + 1);
    }
  }
  std::array<int, 3> clo{}, cext{}, vlo{}, vext{};
  for (int d = 0; d < 3; ++d) {
    clo[d] = cmin[d];
    cext[d] = cmax[d] - cmin[d] + 1;
    vlo[d] = cmin[d] - 1;
    vext[d] = cmax[d] - cmin[d] + 3;
  }
  impl_->charge_lo = clo;
  impl_->charge_ext = cext;
  impl_->tight.init(*mask_, clo, cext, vlo, vext);
}

DemagSolver::~DemagSolver() = default;

double DemagSolver::spectrum_max() const {
  double m = -1e300;
  for (double s : impl_->tight.spec) m = std::max(m, s);
  return m * static_cast<double>(impl_->tight.rbuf.size());
}

DemagCompact DemagSolver::solve_compact(const Vec3Field& m_omega) {
  Engine& en = impl_->tight;
  const DomainMask& mask = *mask_;
  en.run(mask, m_omega);

  DemagCompact out;
  const int64_t nc = mask.n_cells();
  const double inv2h = 1.0 / (2.0 * mask.grid.h());
  out.v_omega.resize(nc);
  for (int d = 0; d < 3; ++d) out.H_omega[d].resize(nc);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const auto [i, j, k] = mask.cell_ijk[c];
    out.v_omega[c] = en.v_win[en.widx(i, j, k)];
    out.H_omega[0][c] =
        (en.v_win[en.widx(i + 1, j, k)] - en.v_win[en.widx(i - 1, j, k)]) *
        inv2h;
    out.H_omega[1][c] =
        (en.v_win[en.widx(i, j + 1, k)] - en.v_win[en.widx(i, j - 1, k)]) *
        inv2h;
    out.H_omega[2][c] =
        (en.v_win[en.widx(i, j, k + 1)] - en.v_win[en.widx(i, j, k - 1)]) *
        inv2h;
  }
  out.field_energy = en.field_energy(mask.grid.h());
  const double mean = en.omega_mean(mask);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) out.v_omega[c] -= mean;
  return out;
}

DemagField DemagSolver::solve(const Vec3Field& m_omega) {
  if (!impl_->full) {
    const GridSpec& g = mask_->grid;
    impl_->full = std::make_unique<Engine>();
    impl_->full->init(*mask_, impl_->charge_lo, impl_->charge_ext,
                      {-1, -1, -1}, {g.n + 2, g.n + 2, g.n + 2});
  }
  Engine& en = *impl_->full;
  const DomainMask& mask = *mask_;
  const GridSpec& g = mask.grid;
  en.run(mask, m_omega);

  DemagField out;
  out.mask = mask_;
  out.field_energy = en.field_energy(g.h());
  const double mean = en.omega_mean(mask);
  const double inv2h = 1.0 / (2.0 * g.h());

  out.v.resize(g.cell_count());
  out.charge.assign(g.cell_count(), 0.0);
  for (int d = 0; d < 3; ++d) out.H[d].resize(g.cell_count());
#pragma omp parallel for schedule(static)
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const int64_t q = g.lin(i, j, k);
        out.v[q] = en.v_win[en.widx(i, j, k)] - mean;
        out.H[0][q] =
            (en.v_win[en.widx(i + 1, j, k)] - en.v_win[en.widx(i - 1, j, k)]) *
            inv2h;
        out.H[1][q] =
            (en.v_win[en.widx(i, j + 1, k)] - en.v_win[en.widx(i, j - 1, k)]) *
            inv2h;
        out.H[2][q] =
            (en.v_win[en.widx(i, j, k + 1)] - en.v_win[en.widx(i, j, k - 1)]) *
            inv2h;
      }
  for (int k = 0; k < en.ext[2]; ++k)
    for (int j = 0; j < en.ext[1]; ++j)
      for (int i = 0; i < en.ext[0]; ++i)
        out.charge[g.lin(i + en.lo[0], j + en.lo[1], k + en.lo[2])] =
            en.charge_win[en.cidx(i, j, k)];

  const int64_t nc = mask.n_cells();
  out.v_omega.resize(nc);
  for (int d = 0; d < 3; ++d) out.H_omega[d].resize(nc);
#pragma omp parallel for schedule(static)
  for (int64_t c = 0; c < nc; ++c) {
    const int64_t q = mask.cells[c];
    out.v_omega[c] = out.v[q];
    for (int d = 0; d < 3; ++d) out.H_omega[d][c] = out.H[d][q];
  }
  return out;
}

void DemagSolver::solve_scalar_compact(const Field& w, const Vec3Field& e,
                                       DemagCompact& out) {
  Vec3Field m;
  const int64_t nc = mask_->n_cells();
  for (int d = 0; d < 3; ++d) {
    m[d].resize(nc);
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < nc; ++c) m[d][c] = w[c] * e[d][c];
  }
  out = solve_compact(m);
}

DemagField DemagSolver::solve_scalar(const Field& w, const Vec3Field& e) {
  Vec3Field m;
  const int64_t nc = mask_->n_cells();
  for (int d = 0; d < 3; ++d) {
    m[d].resize(nc);
    for (int64_t c = 0; c < nc; ++c) m[d][c] = w[c] * e[d][c];
  }
  return solve(m);
}

DemagField solve_demag(const Vec3Field& m_omega,
                       std::shared_ptr<const DomainMask> mask) {
  DemagSolver solver(std::move(mask));
  return solver.solve(m_omega);
}

DemagField apply_L_scalar(const Field& w, const Vec3Field& e,
                          std::shared_ptr<const DomainMask> mask) {
  DemagSolver solver(std::move(mask));
  return solver.solve_scalar(w, e);
}

double demag_pairing(const DomainMask& mask, const Vec3Field& m_omega,
                     const Vec3Field& H_omega) {
  const int64_t nc = mask.n_cells();
  const double h = mask.grid.h();
  double s = 0.0;
  for (int64_t c = 0; c < nc; ++c)
    s += m_omega[0][c] * H_omega[0][c] + m_omega[1][c] * H_omega[1][c] +
         m_omega[2][c] * H_omega[2][c];
  return -s * h * h * h;
}

}  // namespace magsteady
