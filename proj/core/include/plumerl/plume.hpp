#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace plumerl {

class Rng;

/// Pasquill atmospheric stability category. Each class selects one row of
/// the Briggs rural open-country dispersion coefficients.
enum class Stability : std::uint8_t { A, B, C, D, E, F };

char to_char(Stability s);
Stability stability_from_char(char c);

/// One continuous point emitter.
struct PlumeSource {
  double emission_rate = 0.0; // Q, g/s, > 0
  double wind_speed = 0.0;    // u, m/s, > 0
  double stack_height = 0.0;  // H, m, >= 0
  double origin_x = 0.0;      // X, m (world frame)
  double origin_y = 0.0;      // Y, m (world frame)
  Stability stability = Stability::A;
};

/// Integer cell coordinates.
struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

/// Uniform rectilinear grid. Concentrations are evaluated at cell centers:
/// center(i) = origin + (i + 0.5) * cell_size along each axis.
struct GridSpec {
  int nx = 16;
  int ny = 16;
  int nz = 16;
  double cell_size = 125.0; // m per axis; 16 cells span 0..2000 m downwind
  double origin_x = 0.0;
  double origin_y = 0.0;
  double origin_z = 0.0;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx) * ny * nz;
  }
  std::size_t index(const Cell& c) const {
    return (static_cast<std::size_t>(c.x) * ny + c.y) * nz + c.z;
  }
  bool contains(const Cell& c) const {
    return c.x >= 0 && c.x < nx && c.y >= 0 && c.y < ny && c.z >= 0 && c.z < nz;
  }
  std::array<double, 3> cell_center(const Cell& c) const {
    return {origin_x + (c.x + 0.5) * cell_size,
            origin_y + (c.y + 0.5) * cell_size,
            origin_z + (c.z + 0.5) * cell_size};
  }
  /// Nearest cell to a world coordinate; boundary ties resolve to the lower
  /// index. Throws std::invalid_argument when the point lies outside the grid.
  Cell nearest_cell(double wx, double wy, double wz) const;

  void validate() const; // nx,ny,nz >= 2, cell_size > 0
};

/// Rasterized multi-source concentration field over one grid.
struct PlumeField {
  GridSpec grid;
  std::vector<double> concentrations; // row-major, z fastest: ((x*ny)+y)*nz+z
  std::vector<PlumeSource> sources;
  std::vector<Cell> source_cells;

  double at(const Cell& c) const { return concentrations[grid.index(c)]; }
  double max_concentration() const;
};

/// Briggs rural open-country lateral/vertical spreads at downwind distance x.
/// Both are positive and nondecreasing in x. Throws std::domain_error for
/// x <= 0; callers gate on x > 0 (the plume exists only downwind).
struct SigmaPair {
  double sigma_y = 0.0;
  double sigma_z = 0.0;
};
SigmaPair dispersion_coefficients(Stability stability, double downwind_x);

/// Steady-state concentration (g/m³) of a single source at a world point.
/// Zero everywhere at or upwind of the source plane (shifted x <= 0); the
/// ground-reflection image term is included.
double single_source_concentration(const PlumeSource& source, double x, double y, double z);

/// Superposed concentration of several sources. Throws on an empty list.
double total_concentration(const std::vector<PlumeSource>& sources, double x, double y,
                           double z);

/// Evaluates the superposed field at every cell center and records the cell
/// nearest to each source origin. Throws when a source origin falls outside
/// the grid.
PlumeField rasterize_field(const std::vector<PlumeSource>& sources, const GridSpec& grid);

/// Multiplicative-scale Gaussian sensor noise: returns c + N(0, (k·|c|)²).
/// One normal draw is consumed per call regardless of k or c.
double apply_observation_noise(double concentration, double k, Rng& rng);

} // namespace plumerl
