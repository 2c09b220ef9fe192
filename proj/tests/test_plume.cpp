#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plumerl/map_io.hpp"
#include "plumerl/plume.hpp"
#include "plumerl/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace plumerl;

namespace {

// Independent oracle: direct substitution of the closed-form solution with
// its own copy of the Briggs open-country table. Kept deliberately separate
// from the library implementation path.
double oracle_sigma_y(Stability s, double x) {
  const double f = 1.0 / std::sqrt(1.0 + 0.0001 * x);
  switch (s) {
    case Stability::A: return 0.22 * x * f;
    case Stability::B: return 0.16 * x * f;
    case Stability::C: return 0.11 * x * f;
    case Stability::D: return 0.08 * x * f;
    case Stability::E: return 0.06 * x * f;
    case Stability::F: return 0.04 * x * f;
  }
  return 0.0;
}

double oracle_sigma_z(Stability s, double x) {
  switch (s) {
    case Stability::A: return 0.20 * x;
    case Stability::B: return 0.12 * x;
    case Stability::C: return 0.08 * x / std::sqrt(1.0 + 0.0002 * x);
    case Stability::D: return 0.06 * x / std::sqrt(1.0 + 0.0015 * x);
    case Stability::E: return 0.03 * x / (1.0 + 0.0003 * x);
    case Stability::F: return 0.016 * x / (1.0 + 0.0003 * x);
  }
  return 0.0;
}

double oracle_concentration(const PlumeSource& s, double x, double y, double z) {
  const double xs = x - s.origin_x;
  const double ys = y - s.origin_y;
  if (xs <= 0.0) return 0.0;
  const double sy = oracle_sigma_y(s.stability, xs);
  const double sz = oracle_sigma_z(s.stability, xs);
  const double a = s.emission_rate / (2.0 * std::numbers::pi * s.wind_speed * sy * sz);
  const double b = std::exp(-ys * ys / (2.0 * sy * sy));
  const double c = std::exp(-(z - s.stack_height) * (z - s.stack_height) / (2.0 * sz * sz)) +
                   std::exp(-(z + s.stack_height) * (z + s.stack_height) / (2.0 * sz * sz));
  return a * b * c;
}

PlumeSource fig1_c1() { return {10.0, 10.0, 16.0, 0.0, 0.0, Stability::A}; }
PlumeSource fig1_c2() { return {12.0, 8.0, 16.0, 0.0, 0.0, Stability::B}; }

PlumeSource random_source(Rng& rng) {
  PlumeSource s;
  s.emission_rate = rng.uniform(8.0, 15.0);
  s.wind_speed = rng.uniform(5.0, 12.0);
  s.stack_height = rng.uniform(10.0, 20.0);
  s.origin_x = rng.uniform(0.0, 500.0);
  s.origin_y = rng.uniform(0.0, 2000.0);
  s.stability = static_cast<Stability>(rng.uniform_int(0, 5));
  return s;
}

} // namespace

TEST_CASE("dispersion coefficients match hand-evaluated Briggs values") {
  const auto a = dispersion_coefficients(Stability::A, 1000.0);
  CHECK(a.sigma_y == doctest::Approx(209.7617696340303).epsilon(1e-12));
  CHECK(a.sigma_z == doctest::Approx(200.0).epsilon(1e-12));
  const auto d = dispersion_coefficients(Stability::D, 1000.0);
  CHECK(d.sigma_y == doctest::Approx(76.27700713964738).epsilon(1e-12));
  CHECK(d.sigma_z == doctest::Approx(37.947331922020555).epsilon(1e-12));
}

TEST_CASE("dispersion coefficients are positive and nondecreasing") {
  CHECK(dispersion_coefficients(Stability::A, 2000.0).sigma_y >
        dispersion_coefficients(Stability::A, 1000.0).sigma_y);
  for (int c = 0; c < 6; ++c) {
    const auto s = static_cast<Stability>(c);
    double prev_y = 0.0, prev_z = 0.0;
    for (double x = 10.0; x <= 20000.0; x *= 1.5) {
      const auto [sy, sz] = dispersion_coefficients(s, x);
      CHECK(sy > 0.0);
      CHECK(sz > 0.0);
      CHECK(sy >= prev_y);
      CHECK(sz >= prev_z);
      prev_y = sy;
      prev_z = sz;
    }
  }
  CHECK_THROWS_AS(dispersion_coefficients(Stability::A, 0.0), std::domain_error);
  CHECK_THROWS_AS(dispersion_coefficients(Stability::A, -5.0), std::domain_error);
}

TEST_CASE("single source concentration equals direct substitution") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const PlumeSource s = random_source(rng);
    const double x = rng.uniform(-100.0, 2200.0);
    const double y = rng.uniform(-100.0, 2100.0);
    const double z = rng.uniform(0.0, 2000.0);
    const double got = single_source_concentration(s, x, y, z);
    const double want = oracle_concentration(s, x, y, z);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got >= 0.0);
  }
}

TEST_CASE("upwind points see exactly zero") {
  const PlumeSource s = fig1_c1();
  CHECK(single_source_concentration(s, -5.0, 0.0, 16.0) == 0.0);
  CHECK(single_source_concentration(s, 0.0, 0.0, 16.0) == 0.0); // boundary plane
  PlumeSource shifted = s;
  shifted.origin_x = 500.0;
  CHECK(single_source_concentration(shifted, 495.0, 0.0, 16.0) == 0.0);
}

TEST_CASE("lateral mirror symmetry in y") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    const PlumeSource s = random_source(rng);
    const double x = s.origin_x + rng.uniform(1.0, 2000.0);
    const double y = rng.uniform(0.0, 800.0);
    const double z = rng.uniform(0.0, 100.0);
    CHECK(single_source_concentration(s, x, s.origin_y + y, z) ==
          single_source_concentration(s, x, s.origin_y - y, z));
  }
}

TEST_CASE("hand-substituted centerline value at stack height") {
  // u=10, Q=10, H=16, class A, probed at (1000, 0, 16).
  const PlumeSource s = fig1_c1();
  const double sy = 209.7617696340303;
  const double sz = 200.0;
  const double want = 10.0 / (2.0 * std::numbers::pi * 10.0 * sy * sz) *
                      (1.0 + std::exp(-(32.0 * 32.0) / (2.0 * sz * sz)));
  CHECK(single_source_concentration(s, 1000.0, 0.0, 16.0) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("ground reflection doubles the half expression at z = 0") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const PlumeSource s = random_source(rng);
    const double x = s.origin_x + rng.uniform(10.0, 1500.0);
    const double y = s.origin_y + rng.uniform(-200.0, 200.0);
    const auto [sy, sz] = dispersion_coefficients(s.stability, x - s.origin_x);
    const double half = s.emission_rate / (2.0 * std::numbers::pi * s.wind_speed * sy * sz) *
                        std::exp(-(y - s.origin_y) * (y - s.origin_y) / (2.0 * sy * sy)) *
                        std::exp(-s.stack_height * s.stack_height / (2.0 * sz * sz));
    CHECK(single_source_concentration(s, x, y, 0.0) ==
          doctest::Approx(2.0 * half).epsilon(1e-12));
  }
}

TEST_CASE("total concentration is the superposition of its sources") {
  const std::vector<PlumeSource> one{fig1_c1()};
  CHECK(total_concentration(one, 700.0, 50.0, 20.0) ==
        single_source_concentration(one[0], 700.0, 50.0, 20.0));

  // Two identical co-located sources double the value exactly.
  const std::vector<PlumeSource> twin{fig1_c1(), fig1_c1()};
  CHECK(total_concentration(twin, 700.0, 50.0, 20.0) ==
        2.0 * single_source_concentration(twin[0], 700.0, 50.0, 20.0));

  // The two-emitter configuration versus an independent two-call oracle.
  PlumeSource c1 = fig1_c1();
  PlumeSource c2 = fig1_c2();
  c2.origin_x = 250.0;
  c2.origin_y = 375.0;
  const std::vector<PlumeSource> both{c1, c2};
  for (const auto& [px, py, pz] : {std::array<double, 3>{900.0, 100.0, 14.0},
                                   std::array<double, 3>{1500.0, 600.0, 0.0},
                                   std::array<double, 3>{100.0, -50.0, 30.0}}) {
    CHECK(total_concentration(both, px, py, pz) ==
          doctest::Approx(oracle_concentration(c1, px, py, pz) +
                          oracle_concentration(c2, px, py, pz))
              .epsilon(1e-12));
  }
  CHECK_THROWS_AS(total_concentration({}, 0.0, 0.0, 0.0), std::domain_error);
}

TEST_CASE("rasterized field: cell math, zero upwind block, consistency") {
  GridSpec grid;
  PlumeSource s = fig1_c1();
  s.origin_x = grid.cell_center({4, 8, 0})[0];
  s.origin_y = grid.cell_center({4, 8, 0})[1];
  const PlumeField field = rasterize_field({s}, grid);

  CHECK(field.concentrations.size() == 4096);
  CHECK(field.source_cells.size() == 1);
  CHECK(field.source_cells[0] == Cell{4, 8, 0});

  for (int i = 0; i <= 4; ++i) // shifted x <= 0 for every cell center up to the source column
    for (int j = 0; j < grid.ny; ++j)
      for (int k = 0; k < grid.nz; ++k) CHECK(field.at({i, j, k}) == 0.0);

  const auto p = grid.cell_center({9, 8, 0});
  CHECK(field.at({9, 8, 0}) == total_concentration({s}, p[0], p[1], p[2]));
  for (double v : field.concentrations) CHECK(v >= 0.0);
}

TEST_CASE("rasterized single-source field mirrors about the source y plane") {
  GridSpec grid;
  PlumeSource s = fig1_c1();
  // Grid symmetric about y = 1000, which is the boundary between rows 7 and 8;
  // ties at the boundary resolve to the lower cell.
  s.origin_x = 62.5;
  s.origin_y = 1000.0;
  const PlumeField field = rasterize_field({s}, grid);
  CHECK(field.source_cells[0].y == 7);
  for (int i = 0; i < grid.nx; ++i)
    for (int j = 0; j < grid.ny; ++j)
      for (int k = 0; k < grid.nz; ++k)
        CHECK(field.at({i, j, k}) == field.at({i, grid.ny - 1 - j, k}));
}

TEST_CASE("rasterize superposition decomposes cellwise") {
  GridSpec grid;
  PlumeSource a = fig1_c1();
  a.origin_x = 187.5;
  a.origin_y = 437.5;
  PlumeSource b = fig1_c2();
  b.origin_x = 812.5;
  b.origin_y = 1437.5;
  const PlumeField fa = rasterize_field({a}, grid);
  const PlumeField fb = rasterize_field({b}, grid);
  const PlumeField fab = rasterize_field({a, b}, grid);
  for (std::size_t i = 0; i < fab.concentrations.size(); ++i) {
    const double want = fa.concentrations[i] + fb.concentrations[i];
    CHECK(fab.concentrations[i] ==
          doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("source outside the grid fails construction") {
  GridSpec grid;
  PlumeSource s = fig1_c1();
  s.origin_x = -10.0;
  CHECK_THROWS_AS(rasterize_field({s}, grid), std::invalid_argument);
  s.origin_x = 2500.0;
  CHECK_THROWS_AS(rasterize_field({s}, grid), std::invalid_argument);
}

TEST_CASE("nearest cell resolves boundary ties toward the lower index") {
  GridSpec grid;
  CHECK(grid.nearest_cell(250.0, 62.5, 62.5) == Cell{1, 0, 0});  // exactly on the 1|2 boundary
  CHECK(grid.nearest_cell(250.1, 62.5, 62.5) == Cell{2, 0, 0});
  CHECK(grid.nearest_cell(0.0, 0.0, 0.0) == Cell{0, 0, 0});
  CHECK(grid.nearest_cell(2000.0, 2000.0, 2000.0) == Cell{15, 15, 15});
}

TEST_CASE("observation noise: edge cases and moments") {
  Rng rng(3);
  CHECK(apply_observation_noise(0.0, 0.1, rng) == 0.0);
  CHECK(apply_observation_noise(5.0, 0.0, rng) == 5.0);
  CHECK_THROWS_AS(apply_observation_noise(1.0, -0.1, rng), std::domain_error);
  CHECK_THROWS_AS(apply_observation_noise(1.0, 1.5, rng), std::domain_error);

  // Monte-Carlo check of the scale model at c = 1, k = 0.05.
  Rng mc(12345);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = apply_observation_noise(1.0, 0.05, mc) - 1.0;
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  CHECK(stddev > 0.049);
  CHECK(stddev < 0.051);
}

TEST_CASE("seeded noise is reproducible") {
  GridSpec grid;
  PlumeSource s = fig1_c1();
  s.origin_x = 187.5;
  s.origin_y = 937.5;
  const PlumeField field = rasterize_field({s}, grid);
  Rng r1(99), r2(99);
  for (const double c : field.concentrations)
    CHECK(apply_observation_noise(c, 0.07, r1) == apply_observation_noise(c, 0.07, r2));
}

TEST_CASE("map files round-trip bit-exactly and deterministically") {
  GridSpec grid;
  grid.nx = 4;
  grid.ny = 5;
  grid.nz = 6;
  grid.cell_size = 100.0;
  PlumeSource a = fig1_c1();
  a.origin_x = 50.0;
  a.origin_y = 250.0;
  PlumeSource b = fig1_c2();
  b.origin_x = 150.0;
  b.origin_y = 350.0;
  const PlumeField field = rasterize_field({a, b}, grid);

  std::ostringstream s1, s2;
  save_map(field, s1);
  save_map(field, s2);
  CHECK(s1.str() == s2.str());

  std::istringstream in(s1.str());
  const PlumeField loaded = load_map(in);
  CHECK(loaded.grid.nx == field.grid.nx);
  CHECK(loaded.grid.cell_size == field.grid.cell_size);
  CHECK(loaded.concentrations == field.concentrations);
  CHECK(loaded.source_cells == field.source_cells);
  REQUIRE(loaded.sources.size() == 2);
  CHECK(loaded.sources[1].emission_rate == field.sources[1].emission_rate);
  CHECK(loaded.sources[1].stability == field.sources[1].stability);

  std::ostringstream s3;
  save_map(loaded, s3);
  CHECK(s3.str() == s1.str());
}

TEST_CASE("map loader rejects malformed input") {
  std::istringstream bad_magic("not-a-map 1\n");
  CHECK_THROWS_AS(load_map(bad_magic), std::runtime_error);
  std::istringstream truncated("plume-map 1\ngrid 2 2 2\ncell_size 10\norigin 0 0 0\nsources 1\n");
  CHECK_THROWS_AS(load_map(truncated), std::runtime_error);
}
