#include "magsteady/domain.hpp"

#include "magsteady/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>

namespace magsteady {

namespace {

constexpr std::array<std::array<int, 3>, 6> kDirs = {{
    {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}}};

double wrap_to_pi(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

}  // namespace

void GridSpec::validate() const {
  if (n < 8) throw ConfigError("grid: cells_per_side must be >= 8");
  if (!(box_side > 0.0)) throw ConfigError("grid: box_side must be positive");
}

double DomainMask::dot_omega(const std::vector<double>& a,
                             const std::vector<double>& b) const {
  const double h3 = grid.h() * grid.h() * grid.h();
  return h3 * kernels::dot(a.data(), b.data(), n_cells());
}

double DomainMask::nrm_omega(const std::vector<double>& a) const {
  return std::sqrt(dot_omega(a, a));
}

DomainMask build_mask_from_sdf(
    const GridSpec& grid,
    const std::function<double(double, double, double)>& sdf,
    bool require_handle) {
  grid.validate();
  const int n = grid.n;
  const double h = grid.h();

  DomainMask m;
  m.grid = grid;
  m.inside.assign(grid.cell_count(), 0);
  m.cell_index.assign(grid.cell_count(), -1);

  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (sdf(grid.x(i), grid.x(j), grid.x(k)) < 0.0) {
          const int64_t g = grid.lin(i, j, k);
          m.inside[g] = 1;
          m.cell_index[g] = static_cast<int32_t>(m.cells.size());
          m.cells.push_back(static_cast<int32_t>(g));
          m.cell_ijk.push_back({i, j, k});
        }
      }
  if (m.cells.empty()) throw GeometryError("mask: no cell lies inside");
  m.volume = h * h * h * static_cast<double>(m.cells.size());

  // 2-cell exterior margin against the box walls (diagnostic cube masks with
  // boundary on the walls are exempted by construction in build_box_mask).
  const int64_t nc = m.n_cells();
  m.neighbor.resize(nc);
  m.link_alpha.resize(nc);
  m.frac.assign(nc, 1.0);

  auto is_inside = [&](int i, int j, int k) {
    if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n) return false;
    return m.inside[grid.lin(i, j, k)] != 0;
  };

  std::vector<uint8_t> is_bdry(nc, 0);
  for (int32_t c = 0; c < nc; ++c) {
    const auto [i, j, k] = m.cell_ijk[c];
    const double x0 = grid.x(i), y0 = grid.x(j), z0 = grid.x(k);
    for (int d = 0; d < 6; ++d) {
      const int ii = i + kDirs[d][0], jj = j + kDirs[d][1],
                kk = k + kDirs[d][2];
      if (is_inside(ii, jj, kk)) {
        m.neighbor[c][d] = m.cell_index[grid.lin(ii, jj, kk)];
        m.link_alpha[c][d] = 1.0;
        continue;
      }
      m.neighbor[c][d] = -1;
      is_bdry[c] = 1;
      // interface fraction by bisection of the sdf along the link
      double lo = 0.0, hi = 1.0;
      const double ex = kDirs[d][0] * h, ey = kDirs[d][1] * h,
                   ez = kDirs[d][2] * h;
      double flo = sdf(x0, y0, z0);
      if (!(flo < 0.0)) flo = -1e-300;
      double fhi = sdf(x0 + ex, y0 + ey, z0 + ez);
      if (fhi <= 0.0) {
        // neighbor center classified outside but sdf non-positive at the
        // endpoint (box walls); put the interface on the shared face
        m.link_alpha[c][d] = 0.5;
      } else {
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = sdf(x0 + mid * ex, y0 + mid * ey, z0 + mid * ez);
          (fm < 0.0 ? lo : hi) = mid;
        }
        m.link_alpha[c][d] = std::clamp(0.5 * (lo + hi), 0.05, 1.0);
      }
      const double a = m.link_alpha[c][d];
      m.cut_links.push_back({c, static_cast<uint8_t>(d), a, x0 + a * ex,
                             y0 + a * ey, z0 + a * ez});
    }
  }

  m.boundary_index.assign(nc, -1);
  for (int32_t c = 0; c < nc; ++c) {
    const auto [i, j, k] = m.cell_ijk[c];
    const double x0 = grid.x(i), y0 = grid.x(j), z0 = grid.x(k);
    const double d0 = sdf(x0, y0, z0);
    if (std::fabs(d0) < h) m.frac[c] = std::clamp(0.5 - d0 / h, 0.0, 1.0);
    if (!is_bdry[c]) continue;
    const double eps = 0.5 * h;
    double gx = (sdf(x0 + eps, y0, z0) - sdf(x0 - eps, y0, z0)) / (2 * eps);
    double gy = (sdf(x0, y0 + eps, z0) - sdf(x0, y0 - eps, z0)) / (2 * eps);
    double gz = (sdf(x0, y0, z0 + eps) - sdf(x0, y0, z0 - eps)) / (2 * eps);
    const double g = std::max(std::hypot(gx, gy, gz), 1e-30);
    m.boundary_index[c] = static_cast<int32_t>(m.boundary_cells.size());
    m.boundary_cells.push_back({c, d0, gx / g, gy / g, gz / g});
  }

  // connectivity of the inside set
  {
    std::vector<uint8_t> seen(nc, 0);
    std::deque<int32_t> q{0};
    seen[0] = 1;
    int64_t cnt = 1;
    while (!q.empty()) {
      const int32_t c = q.front();
      q.pop_front();
      for (int d = 0; d < 6; ++d) {
        const int32_t nb = m.neighbor[c][d];
        if (nb >= 0 && !seen[nb]) {
          seen[nb] = 1;
          ++cnt;
          q.push_back(nb);
        }
      }
    }
    if (cnt != nc) throw GeometryError("mask: inside set is disconnected");
  }

  // connectivity of the complement within the box
  {
    const int64_t total = grid.cell_count();
    std::vector<uint8_t> seen(total, 0);
    std::deque<int64_t> q;
    if (m.inside[0]) throw GeometryError("mask: domain touches the box corner");
    q.push_back(0);
    seen[0] = 1;
    int64_t cnt = 1, n_out = total - nc;
    while (!q.empty()) {
      const int64_t g = q.front();
      q.pop_front();
      const int i = static_cast<int>(g % n), j = static_cast<int>((g / n) % n),
                k = static_cast<int>(g / (int64_t(n) * n));
      for (int d = 0; d < 6; ++d) {
        const int ii = i + kDirs[d][0], jj = j + kDirs[d][1],
                  kk = k + kDirs[d][2];
        if (ii < 0 || ii >= n || jj < 0 || jj >= n || kk < 0 || kk >= n)
          continue;
        const int64_t gg = grid.lin(ii, jj, kk);
        if (!m.inside[gg] && !seen[gg]) {
          seen[gg] = 1;
          ++cnt;
          q.push_back(gg);
        }
      }
    }
    if (cnt != n_out)
      throw GeometryError("mask: complement within the box is disconnected");
  }

  if (require_handle) {
    // the four cell columns straddling the z-axis must lie in the complement
    // (they carry the core loop through the hole)
    const int c0 = n / 2 - 1, c1 = n / 2;
    for (int k = 0; k < n; ++k)
      for (int i : {c0, c1})
        for (int j : {c0, c1})
          if (m.inside[grid.lin(i, j, k)])
            throw GeometryError(
                "mask: z-axis intersects the domain (no handle)");
    // and an encircling loop inside the domain must exist
    double rho_sum = 0.0;
    for (int32_t c = 0; c < nc; ++c) rho_sum += std::hypot(m.cx(c), m.cy(c));
    core_loop(m, rho_sum / static_cast<double>(nc));
  }
  return m;
}

DomainMask build_torus_mask(double major_radius, double minor_radius,
                            const GridSpec& grid) {
  grid.validate();
  if (!(minor_radius > 0.0) || !(minor_radius < major_radius))
    throw ConfigError("torus: need 0 < r < R");
  if (major_radius + minor_radius >= 0.5 * grid.box_side - 2.0 * grid.h())
    throw ConfigError("torus: R + r leaves less than a 2-cell margin");
  auto sdf = [=](double x, double y, double z) {
    return std::hypot(std::hypot(x, y) - major_radius, z) - minor_radius;
  };
  return build_mask_from_sdf(grid, sdf, /*require_handle=*/true);
}

DomainMask build_ball_mask(double radius, const GridSpec& grid) {
  grid.validate();
  if (!(radius > 0.0) || radius >= 0.5 * grid.box_side - 2.0 * grid.h())
    throw ConfigError("ball: radius leaves less than a 2-cell margin");
  auto sdf = [=](double x, double y, double z) {
    return std::hypot(x, y, z) - radius;
  };
  return build_mask_from_sdf(grid, sdf, /*require_handle=*/false);
}

DomainMask build_box_mask(double side, const GridSpec& grid) {
  grid.validate();
  if (!(side > 0.0) || side > grid.box_side)
    throw ConfigError("box mask: side must be in (0, box_side]");
  auto sdf = [=](double x, double y, double z) {
    const double half = 0.5 * side;
    return std::max({std::fabs(x), std::fabs(y), std::fabs(z)}) - half;
  };
  return build_mask_from_sdf(grid, sdf, /*require_handle=*/false);
}

ReferenceAngle reference_angle(const DomainMask& mask) {
  const int64_t nc = mask.n_cells();
  // the chart is smooth only when the axis stays clear of the closure
  for (int32_t c = 0; c < nc; ++c)
    if (std::hypot(mask.cx(c), mask.cy(c)) < 2.0 * mask.grid.h())
      throw GeometryError("reference_angle: z-axis intersects the domain");
  ReferenceAngle ref;
  ref.value.resize(nc);
  ref.grad.resize(nc);
  for (int32_t c = 0; c < nc; ++c) {
    const double x = mask.cx(c), y = mask.cy(c);
    const double rho2 = x * x + y * y;
    ref.value[c] = std::atan2(y, x);
    ref.grad[c] = {-y / rho2, x / rho2, 0.0};
  }
  return ref;
}

double BoundaryData::eval(double x, double y, double /*z*/) const {
  const double t = std::atan2(y, x);
  return winding * t + perturb * std::cos(t);
}

double BoundaryData::eval_g0(double x, double y, double /*z*/) const {
  return perturb * std::cos(std::atan2(y, x));
}

BoundaryData make_boundary_data(const DomainMask& mask, int winding,
                                double perturb) {
  BoundaryData bd;
  bd.winding = winding;
  bd.perturb = perturb;
  bd.theta_g.reserve(mask.boundary_cells.size());
  for (const auto& b : mask.boundary_cells) {
    const int32_t c = b.cell;
    bd.theta_g.push_back(
        wrap_to_pi(bd.eval(mask.cx(c), mask.cy(c), mask.cz(c))));
  }
  return bd;
}

namespace {

// Walk the circle of radius rho in the plane z ~ 0, snapping to cells that
// satisfy `accept`, and make the path 4-adjacent in (i,j) by inserting the
// corner cell. Returns compact ids.
std::vector<int32_t> trace_ring(
    const DomainMask& mask, double rho,
    const std::function<int32_t(int, int, int)>& accept) {
  const GridSpec& g = mask.grid;
  const int n = g.n;
  const int kmid = n / 2;  // first plane above z = 0
  auto cell_of_angle = [&](double a) {
    const int i = std::clamp(
        static_cast<int>(std::floor((rho * std::cos(a) + 0.5 * g.box_side) /
                                    g.h())),
        0, n - 1);
    const int j = std::clamp(
        static_cast<int>(std::floor((rho * std::sin(a) + 0.5 * g.box_side) /
                                    g.h())),
        0, n - 1);
    return std::pair<int, int>{i, j};
  };
  const int steps = 16 * n;
  std::vector<std::pair<int, int>> path;
  for (int s = 0; s < steps; ++s) {
    const auto ij = cell_of_angle(2.0 * std::numbers::pi * s / steps);
    if (path.empty() || ij != path.back()) path.push_back(ij);
  }
  while (path.size() > 1 && path.front() == path.back()) path.pop_back();
  // repair diagonal steps
  std::vector<std::pair<int, int>> adj;
  for (size_t s = 0; s < path.size(); ++s) {
    const auto [i0, j0] = path[s];
    const auto [i1, j1] = path[(s + 1) % path.size()];
    adj.push_back(path[s]);
    if (i0 != i1 && j0 != j1) {
      if (accept(i1, j0, kmid) >= 0)
        adj.push_back({i1, j0});
      else
        adj.push_back({i0, j1});
    }
  }
  std::vector<int32_t> loop;
  for (const auto& [i, j] : adj) {
    const int32_t c = accept(i, j, kmid);
    if (c < 0)
      throw GeometryError("loop: ring cell is not acceptable at this radius");
    if (loop.empty() || c != loop.back()) loop.push_back(c);
  }
  while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
  if (loop.size() < 4) throw GeometryError("loop: degenerate ring");
  return loop;
}

}  // namespace

std::vector<int32_t> core_loop(const DomainMask& mask, double rho) {
  auto accept = [&](int i, int j, int k) -> int32_t {
    const int64_t g = mask.grid.lin(i, j, k);
    return mask.inside[g] ? mask.cell_index[g] : -1;
  };
  return trace_ring(mask, rho, accept);
}

std::vector<int32_t> boundary_loop(const DomainMask& mask) {
  // outer equator: the largest center radius among midplane boundary cells
  const int kmid = mask.grid.n / 2;
  double rho = -1.0;
  for (const auto& b : mask.boundary_cells) {
    if (mask.cell_ijk[b.cell][2] != kmid) continue;
    rho = std::max(rho, std::hypot(mask.cx(b.cell), mask.cy(b.cell)));
  }
  if (rho <= 0.0)
    throw GeometryError("boundary loop: no boundary cell on the midplane");
  auto accept = [&](int i, int j, int k) -> int32_t {
    const int64_t g = mask.grid.lin(i, j, k);
    if (!mask.inside[g]) return -1;
    const int32_t c = mask.cell_index[g];
    return mask.boundary_index[c] >= 0 ? c : -1;
  };
  return trace_ring(mask, rho, accept);
}

int winding_number(const std::vector<double>& theta_per_cell,
                   const std::vector<int32_t>& loop) {
  if (loop.size() < 3) throw GeometryError("winding: loop too short");
  double total = 0.0;
  for (size_t s = 0; s < loop.size(); ++s) {
    const double d = wrap_to_pi(theta_per_cell[loop[(s + 1) % loop.size()]] -
                                theta_per_cell[loop[s]]);
    if (std::fabs(d) >= std::numbers::pi - 1e-9)
      throw ResolutionError(
          "winding: angle jump of pi between adjacent cells; field varies "
          "too fast for the grid");
    total += d;
  }
  const double w = total / (2.0 * std::numbers::pi);
  const int wi = static_cast<int>(std::lround(w));
  if (std::fabs(w - wi) > 1e-6)
    throw InternalError("winding: loop sum is not an integer multiple of 2pi");
  return wi;
}

void export_mask(const DomainMask& mask, const std::string& path, double R,
                 double r) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open mask file for writing: " + path);
  std::fprintf(f, "N %d box_side %.17g R %.17g r %.17g\n", mask.grid.n,
               mask.grid.box_side, R, r);
  const int64_t total = mask.grid.cell_count();
  for (int64_t g = 0; g < total; ++g) {
    std::fputc(mask.inside[g] ? '1' : '0', f);
    if ((g + 1) % mask.grid.n == 0) std::fputc('\n', f);
  }
  std::fclose(f);
}

}  // namespace magsteady
