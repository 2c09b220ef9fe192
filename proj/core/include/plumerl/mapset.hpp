#pragma once

#include "plumerl/config.hpp"
#include "plumerl/plume.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace plumerl {

/// The training/evaluation corpus: disjointly parameterized two-source
/// fields, split into train and test halves.
struct MapSet {
  std::uint64_t seed = 0;
  std::vector<PlumeField> train;
  std::vector<PlumeField> test;
};

/// Deals source parameter combinations from the shuffled sweep without
/// replacement (so no tuple appears twice anywhere in the set), shifts each
/// pair to distinct random cell-centered positions, and rasterizes the
/// superposed fields. Deterministic under the seed.
MapSet generate_map_set(const Hyperparameters& hp, std::uint64_t seed);

/// Writes train_NN.map / test_NN.map plus a mapset.json index.
void save_map_set(const MapSet& maps, const std::filesystem::path& dir);
MapSet load_map_set(const std::filesystem::path& dir);

} // namespace plumerl
