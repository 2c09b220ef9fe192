#include "plumerl/map_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plumerl {

namespace {

constexpr const char* kMagic = "plume-map";
constexpr int kVersion = 1;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("map file: " + msg);
}

std::string expect_word(std::istream& in, const char* what) {
  std::string w;
  if (!(in >> w)) fail(std::string("missing ") + what);
  return w;
}

void expect_keyword(std::istream& in, const std::string& kw) {
  const std::string w = expect_word(in, kw.c_str());
  if (w != kw) fail("expected '" + kw + "', found '" + w + "'");
}

double read_double(std::istream& in, const char* what) {
  double v;
  if (!(in >> v)) fail(std::string("bad number for ") + what);
  return v;
}

int read_int(std::istream& in, const char* what) {
  int v;
  if (!(in >> v)) fail(std::string("bad integer for ") + what);
  return v;
}

} // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_map(const PlumeField& field, std::ostream& out) {
  const GridSpec& g = field.grid;
  out << kMagic << ' ' << kVersion << '\n';
  out << "grid " << g.nx << ' ' << g.ny << ' ' << g.nz << '\n';
  out << "cell_size " << format_double(g.cell_size) << '\n';
  out << "origin " << format_double(g.origin_x) << ' ' << format_double(g.origin_y) << ' '
      << format_double(g.origin_z) << '\n';
  out << "sources " << field.sources.size() << '\n';
  for (const auto& s : field.sources) {
    out << "source " << format_double(s.emission_rate) << ' ' << format_double(s.wind_speed)
        << ' ' << format_double(s.stack_height) << ' ' << format_double(s.origin_x) << ' '
        << format_double(s.origin_y) << ' ' << to_char(s.stability) << '\n';
  }
  for (const auto& c : field.source_cells)
    out << "source_cell " << c.x << ' ' << c.y << ' ' << c.z << '\n';
  out << "data\n";
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      for (int k = 0; k < g.nz; ++k) {
        const std::size_t idx = g.index({i, j, k});
        out << format_double(field.concentrations[idx]);
        out << (k + 1 == g.nz ? '\n' : ' ');
      }
    }
}

void save_map(const PlumeField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open for writing: " + path.string());
  save_map(field, out);
  if (!out) fail("write failed: " + path.string());
}

PlumeField load_map(std::istream& in) {
  expect_keyword(in, kMagic);
  const int version = read_int(in, "version");
  if (version != kVersion) fail("unsupported version " + std::to_string(version));

  PlumeField field;
  GridSpec& g = field.grid;
  expect_keyword(in, "grid");
  g.nx = read_int(in, "nx");
  g.ny = read_int(in, "ny");
  g.nz = read_int(in, "nz");
  expect_keyword(in, "cell_size");
  g.cell_size = read_double(in, "cell_size");
  expect_keyword(in, "origin");
  g.origin_x = read_double(in, "origin_x");
  g.origin_y = read_double(in, "origin_y");
  g.origin_z = read_double(in, "origin_z");
  g.validate();

  expect_keyword(in, "sources");
  const int n_sources = read_int(in, "source count");
  if (n_sources <= 0) fail("source count must be positive");
  for (int s = 0; s < n_sources; ++s) {
    expect_keyword(in, "source");
    PlumeSource src;
    src.emission_rate = read_double(in, "emission_rate");
    src.wind_speed = read_double(in, "wind_speed");
    src.stack_height = read_double(in, "stack_height");
    src.origin_x = read_double(in, "origin_x");
    src.origin_y = read_double(in, "origin_y");
    const std::string cls = expect_word(in, "stability class");
    if (cls.size() != 1) fail("stability class must be a single letter");
    src.stability = stability_from_char(cls[0]);
    field.sources.push_back(src);
  }
  for (int s = 0; s < n_sources; ++s) {
    expect_keyword(in, "source_cell");
    Cell c;
    c.x = read_int(in, "cell x");
    c.y = read_int(in, "cell y");
    c.z = read_int(in, "cell z");
    if (!g.contains(c)) fail("source cell outside grid");
    field.source_cells.push_back(c);
  }

  expect_keyword(in, "data");
  field.concentrations.resize(g.cell_count());
  for (std::size_t i = 0; i < field.concentrations.size(); ++i) {
    double v;
    if (!(in >> v)) fail("truncated data section at value " + std::to_string(i));
    if (v < 0.0) fail("negative concentration in data section");
    field.concentrations[i] = v;
  }
  return field;
}

PlumeField load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path.string());
  return load_map(in);
}

} // namespace plumerl
