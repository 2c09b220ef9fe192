#include "plumerl/plume.hpp"

#include "plumerl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plumerl {

char to_char(Stability s) {
  return static_cast<char>('A' + static_cast<int>(s));
}

Stability stability_from_char(char c) {
  if (c < 'A' || c > 'F') throw std::invalid_argument("stability class must be A..F");
  return static_cast<Stability>(c - 'A');
}

void GridSpec::validate() const {
  if (nx < 2 || ny < 2 || nz < 2)
    throw std::invalid_argument("grid needs at least 2 cells per axis");
  if (!(cell_size > 0.0)) throw std::invalid_argument("cell_size must be positive");
}

namespace {

int nearest_axis_cell(double w, double origin, double cell, int n, const char* axis) {
  const double u = (w - origin) / cell;
  if (u < 0.0 || u > static_cast<double>(n))
    throw std::invalid_argument(std::string("point outside grid on axis ") + axis);
  int i = static_cast<int>(std::floor(u));
  // A point exactly on an interior cell boundary is equidistant from the two
  // adjacent centers; ties go to the lower index.
  if (u == std::floor(u) && u > 0.0) i -= 1;
  return std::clamp(i, 0, n - 1);
}

} // namespace

Cell GridSpec::nearest_cell(double wx, double wy, double wz) const {
  return {nearest_axis_cell(wx, origin_x, cell_size, nx, "x"),
          nearest_axis_cell(wy, origin_y, cell_size, ny, "y"),
          nearest_axis_cell(wz, origin_z, cell_size, nz, "z")};
}

double PlumeField::max_concentration() const {
  double m = 0.0;
  for (double v : concentrations) m = std::max(m, v);
  return m;
}

SigmaPair dispersion_coefficients(Stability stability, double downwind_x) {
  if (!(downwind_x > 0.0))
    throw std::domain_error("dispersion coefficients defined for downwind x > 0 only");
  const double x = downwind_x;
  switch (stability) {
    case Stability::A:
      return {0.22 * x / std::sqrt(1.0 + 0.0001 * x), 0.20 * x};
    case Stability::B:
      return {0.16 * x / std::sqrt(1.0 + 0.0001 * x), 0.12 * x};
    case Stability::C:
      return {0.11 * x / std::sqrt(1.0 + 0.0001 * x),
              0.08 * x / std::sqrt(1.0 + 0.0002 * x)};
    case Stability::D:
      return {0.08 * x / std::sqrt(1.0 + 0.0001 * x),
              0.06 * x / std::sqrt(1.0 + 0.0015 * x)};
    case Stability::E:
      return {0.06 * x / std::sqrt(1.0 + 0.0001 * x),
              0.03 * x / (1.0 + 0.0003 * x)};
    case Stability::F:
      return {0.04 * x / std::sqrt(1.0 + 0.0001 * x),
              0.016 * x / (1.0 + 0.0003 * x)};
  }
  throw std::domain_error("unknown stability class");
}

double single_source_concentration(const PlumeSource& source, double x, double y, double z) {
  if (!(source.emission_rate > 0.0)) throw std::domain_error("emission rate must be > 0");
  if (!(source.wind_speed > 0.0)) throw std::domain_error("wind speed must be > 0");
  if (!(source.stack_height >= 0.0)) throw std::domain_error("stack height must be >= 0");
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
    throw std::domain_error("evaluation point must be finite");
  if (z < 0.0) throw std::domain_error("evaluation point below ground (z < 0)");

  const double xs = x - source.origin_x;
  const double ys = y - source.origin_y;
  // Unidirectional wind: no contaminant at or upwind of the source plane.
  if (xs <= 0.0) return 0.0;

  const auto [sy, sz] = dispersion_coefficients(source.stability, xs);
  const double h = source.stack_height;
  const double norm = source.emission_rate /
                      (2.0 * std::numbers::pi * source.wind_speed * sy * sz);
  const double lateral = std::exp(-(ys * ys) / (2.0 * sy * sy));
  const double vertical = std::exp(-((z - h) * (z - h)) / (2.0 * sz * sz)) +
                          std::exp(-((z + h) * (z + h)) / (2.0 * sz * sz));
  return norm * lateral * vertical;
}

double total_concentration(const std::vector<PlumeSource>& sources, double x, double y,
                           double z) {
  if (sources.empty()) throw std::domain_error("total_concentration needs at least one source");
  double c = 0.0;
  for (const auto& s : sources) c += single_source_concentration(s, x, y, z);
  return c;
}

PlumeField rasterize_field(const std::vector<PlumeSource>& sources, const GridSpec& grid) {
  grid.validate();
  if (sources.empty()) throw std::invalid_argument("rasterize_field needs at least one source");

  PlumeField field;
  field.grid = grid;
  field.sources = sources;
  field.source_cells.reserve(sources.size());
  for (const auto& s : sources)
    field.source_cells.push_back(grid.nearest_cell(s.origin_x, s.origin_y, s.stack_height));

  field.concentrations.resize(grid.cell_count());
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j)
      for (int k = 0; k < grid.nz; ++k) {
        const Cell c{i, j, k};
        const auto p = grid.cell_center(c);
        field.concentrations[grid.index(c)] = total_concentration(sources, p[0], p[1], p[2]);
      }
  return field;
}

double apply_observation_noise(double concentration, double k, Rng& rng) {
  if (!(k >= 0.0) || !(k <= 1.0))
    throw std::domain_error("noise fraction k must lie in [0, 1]");
  // Stream discipline: exactly one draw per call, so seeded noise sequences
  // do not depend on the data passing through.
  const double nu = rng.normal();
  return concentration + k * std::abs(concentration) * nu;
}

} // namespace plumerl
