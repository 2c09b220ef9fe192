#pragma once

#include "plumerl/plume.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace plumerl {

/// Parameter ranges swept when synthesizing the map set. Each axis is an
/// inclusive linspace; every (u, Q, H, class) combination is a candidate
/// source and map sources are dealt from the shuffled candidate list
/// without replacement, so train and test parameter tuples never overlap.
struct MapGenRanges {
  double u_min = 5.0; // wind speed, m/s
  double u_max = 12.0;
  int u_steps = 8;
  double q_min = 8.0; // emission rate, g/s
  double q_max = 15.0;
  int q_steps = 8;
  double h_min = 10.0; // effective stack height, m
  double h_max = 20.0;
  int h_steps = 6;
  std::string classes = "ABCD";
  int train_maps = 20;
  int test_maps = 20;
};

inline constexpr int kSourcesPerMap = 2;

/// Everything a training/evaluation run is parameterized by. Defaults are
/// the full-scale profile; desk_profile() shrinks the run to laptop scale
/// while keeping every mechanism.
struct Hyperparameters {
  double alpha = 0.001; // Adam learning rate
  double tau = 0.01;    // soft-update blend
  double gamma = 0.999; // discount
  int batch_size = 768; // sequences per update
  int seq_len = 75;     // transitions per sequence
  int hidden_size = 1024;
  int obs_embed = 64;
  int act_embed = 64;
  int max_epochs = 5000; // epoch cap per episode
  double eps_max = 1.0;
  double eps_min = 0.05;
  double lambda = 100.0;        // epsilon decay constant
  long t_init = 22000;          // pure-exploration episodes
  long total_episodes = 23000;
  int agents = 2;
  double noise_k_min = 0.05;
  double noise_k_max = 0.10;
  GridSpec grid{};
  std::size_t buffer_capacity = 100000;
  double clip_norm = 0.0; // 0 disables gradient clipping
  long checkpoint_interval = 500;
  int eval_episodes = 200;
  MapGenRanges mapgen{};

  void validate() const;
};

Hyperparameters full_profile();
Hyperparameters desk_profile();
/// "full" or "desk"; throws std::invalid_argument otherwise.
Hyperparameters profile_by_name(const std::string& name);

/// Applies `key = value` lines ('#' starts a comment) on top of hp.
/// Unknown keys are rejected with std::runtime_error naming the key.
void apply_config_text(Hyperparameters& hp, std::istream& in);
void apply_config_file(Hyperparameters& hp, const std::filesystem::path& path);
/// Full dump in the same key = value format (documents every key).
std::string config_to_text(const Hyperparameters& hp);

} // namespace plumerl
