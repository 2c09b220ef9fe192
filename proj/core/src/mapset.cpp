#include "plumerl/mapset.hpp"

#include "plumerl/map_io.hpp"
#include "plumerl/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace plumerl {

using nlohmann::json;

namespace {

double linspace_at(double lo, double hi, int steps, int i) {
  if (steps <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

std::string map_file_name(const char* split, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%02d.map", split, index);
  return buf;
}

} // namespace

MapSet generate_map_set(const Hyperparameters& hp, std::uint64_t seed) {
  hp.validate();
  const MapGenRanges& r = hp.mapgen;
  const GridSpec& grid = hp.grid;

  // Systematic sweep over the parameter ranges; each combination is one
  // candidate source centered at the origin until shifted onto the map.
  std::vector<PlumeSource> combos;
  for (char cls : r.classes)
    for (int hi = 0; hi < r.h_steps; ++hi)
      for (int qi = 0; qi < r.q_steps; ++qi)
        for (int ui = 0; ui < r.u_steps; ++ui) {
          PlumeSource s;
          s.wind_speed = linspace_at(r.u_min, r.u_max, r.u_steps, ui);
          s.emission_rate = linspace_at(r.q_min, r.q_max, r.q_steps, qi);
          s.stack_height = linspace_at(r.h_min, r.h_max, r.h_steps, hi);
          s.stability = stability_from_char(cls);
          combos.push_back(s);
        }

  const int total_maps = r.train_maps + r.test_maps;
  const std::size_t needed = static_cast<std::size_t>(total_maps) * kSourcesPerMap;
  if (combos.size() < needed)
    throw std::runtime_error("map generation: parameter sweep yields " +
                             std::to_string(combos.size()) + " sources, need " +
                             std::to_string(needed));

  Rng rng(seed);
  // Fisher-Yates with the project rng so the draw order is pinned.
  for (std::size_t i = combos.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)));
    std::swap(combos[i], combos[j]);
  }

  MapSet set;
  set.seed = seed;
  std::size_t next_combo = 0;
  for (int m = 0; m < total_maps; ++m) {
    std::vector<PlumeSource> sources;
    std::vector<Cell> cells;
    for (int s = 0; s < kSourcesPerMap; ++s) {
      PlumeSource src = combos[next_combo++];
      Cell cell;
      do {
        cell.x = rng.uniform_int(0, grid.nx - 1);
        cell.y = rng.uniform_int(0, grid.ny - 1);
        const auto center = grid.cell_center(cell);
        src.origin_x = center[0];
        src.origin_y = center[1];
        cell = grid.nearest_cell(src.origin_x, src.origin_y, src.stack_height);
      } while (std::find(cells.begin(), cells.end(), cell) != cells.end());
      cells.push_back(cell);
      sources.push_back(src);
    }
    PlumeField field = rasterize_field(sources, grid);
    if (m < r.train_maps)
      set.train.push_back(std::move(field));
    else
      set.test.push_back(std::move(field));
  }
  return set;
}

void save_map_set(const MapSet& maps, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json index;
  index["seed"] = maps.seed;
  index["train"] = json::array();
  index["test"] = json::array();
  for (std::size_t i = 0; i < maps.train.size(); ++i) {
    const std::string name = map_file_name("train", static_cast<int>(i));
    save_map(maps.train[i], dir / name);
    index["train"].push_back(name);
  }
  for (std::size_t i = 0; i < maps.test.size(); ++i) {
    const std::string name = map_file_name("test", static_cast<int>(i));
    save_map(maps.test[i], dir / name);
    index["test"].push_back(name);
  }
  std::ofstream out(dir / "mapset.json");
  if (!out) throw std::runtime_error("cannot write mapset.json in " + dir.string());
  out << index.dump(2) << '\n';
}

MapSet load_map_set(const std::filesystem::path& dir) {
  std::ifstream in(dir / "mapset.json");
  if (!in) throw std::runtime_error("cannot open " + (dir / "mapset.json").string());
  json index;
  in >> index;
  MapSet set;
  set.seed = index.at("seed").get<std::uint64_t>();
  for (const auto& name : index.at("train"))
    set.train.push_back(load_map(dir / name.get<std::string>()));
  for (const auto& name : index.at("test"))
    set.test.push_back(load_map(dir / name.get<std::string>()));
  if (set.train.empty() || set.test.empty())
    throw std::runtime_error("map set in " + dir.string() + " is empty");
  return set;
}

} // namespace plumerl
