// domain.hpp — voxelized domains in a cubic box, boundary metadata, and
// winding numbers of angle fields on non-simply-connected masks.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace magsteady {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolveError : std::runtime_error {
  double residual = 0.0;
  int iterations = 0;
  SolveError(const std::string& msg, double res = 0.0, int it = 0)
      : std::runtime_error(msg), residual(res), iterations(it) {}
};
struct ChartError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Uniform cubic grid of N^3 cells filling [-box_side/2, box_side/2]^3,
// cell centers at (-box/2 + (i+1/2) h). N >= 8.
struct GridSpec {
  double box_side = 1.0;
  int n = 48;

  double h() const { return box_side / n; }
  int64_t cell_count() const { return int64_t(n) * n * n; }
  int64_t lin(int i, int j, int k) const {
    return (int64_t(k) * n + j) * n + i;
  }
  double x(int i) const { return -0.5 * box_side + (i + 0.5) * h(); }
  void validate() const;
};

// A Dirichlet link: the segment from a cell center toward an outside
// neighbor crosses the interface at distance alpha*h (alpha in (0,1]).
struct CutLink {
  int32_t cell;       // compact cell id
  uint8_t dir;        // 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z
  double alpha;       // interface fraction along the link
  double px, py, pz;  // interface point, used to evaluate boundary data
};

struct BoundaryCell {
  int32_t cell;        // compact cell id
  double sdist;        // signed distance of the center, negative inside
  double nx, ny, nz;   // outward normal at the center's closest point
};

struct DomainMask {
  GridSpec grid;
  std::vector<uint8_t> inside;          // per grid cell, chi_Omega
  std::vector<int32_t> cell_index;      // grid lin -> compact id or -1
  std::vector<int32_t> cells;           // compact id -> grid lin
  std::vector<std::array<int32_t, 3>> cell_ijk;
  // compact id -> 6 neighbors; >=0 compact id, -1 outside (Dirichlet)
  std::vector<std::array<int32_t, 6>> neighbor;
  // compact id -> per-direction interface fraction (1 when neighbor inside)
  std::vector<std::array<double, 6>> link_alpha;
  std::vector<double> frac;             // cut-cell volume fraction weight
  std::vector<BoundaryCell> boundary_cells;
  std::vector<int32_t> boundary_index;  // compact id -> boundary_cells or -1
  std::vector<CutLink> cut_links;
  double volume = 0.0;                  // h^3 * #inside

  int64_t n_cells() const { return static_cast<int64_t>(cells.size()); }
  double cx(int32_t c) const { return grid.x(cell_ijk[c][0]); }
  double cy(int32_t c) const { return grid.x(cell_ijk[c][1]); }
  double cz(int32_t c) const { return grid.x(cell_ijk[c][2]); }
  // discrete L2(Omega) inner product (chi-weighted, h^3 included)
  double dot_omega(const std::vector<double>& a,
                   const std::vector<double>& b) const;
  double nrm_omega(const std::vector<double>& a) const;
};

// theta_ref = atan2(y, x) with its analytic gradient, tabulated per cell.
struct ReferenceAngle {
  std::vector<double> value;
  std::vector<std::array<double, 3>> grad;
};

// Dirichlet angle data theta_g = winding * theta_ref + perturb * cos(theta_ref),
// sampled on boundary cells and evaluable at interface points.
struct BoundaryData {
  int winding = 1;
  double perturb = 0.0;
  std::vector<double> theta_g;  // per boundary cell (same order as mask list)

  double eval(double x, double y, double z) const;
  // single-valued part g0 = theta_g - winding*theta_ref
  double eval_g0(double x, double y, double z) const;
};

DomainMask build_torus_mask(double major_radius, double minor_radius,
                            const GridSpec& grid);
DomainMask build_ball_mask(double radius, const GridSpec& grid);
// Cube of side L centered in the box (Dirichlet at the cube faces).
DomainMask build_box_mask(double side, const GridSpec& grid);

// Generic builder from a signed distance function (negative inside).
DomainMask build_mask_from_sdf(const GridSpec& grid,
                               const std::function<double(double, double, double)>& sdf,
                               bool require_handle);

ReferenceAngle reference_angle(const DomainMask& mask);

BoundaryData make_boundary_data(const DomainMask& mask, int winding,
                                double perturb = 0.0);

// Closed path of face-adjacent inside cells encircling the torus hole at
// radius rho (midplane). Throws GeometryError when no such loop exists.
std::vector<int32_t> core_loop(const DomainMask& mask, double rho);
// Same but restricted to boundary cells, tracing a generating loop of the
// boundary surface.
std::vector<int32_t> boundary_loop(const DomainMask& mask);

// (1/2pi) * sum of unwrapped angle differences along the closed loop.
// Throws ResolutionError when a consecutive jump reaches pi.
int winding_number(const std::vector<double>& theta_per_cell,
                   const std::vector<int32_t>& loop);

void export_mask(const DomainMask& mask, const std::string& path,
                 double R = 0.0, double r = 0.0);

}  // namespace magsteady
