#pragma once

#include "plumerl/agent.hpp"
#include "plumerl/config.hpp"
#include "plumerl/mapset.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace plumerl {

/// One row of the training metrics CSV.
struct EpisodeRecord {
  long episode = 0;
  int map_id = 0;
  int epochs = 0;
  double total_reward = 0.0;
  bool success = false;
  std::size_t unique_cells = 0;
  double eps = 0.0;
};

std::string episode_csv_header(); // episode,map_id,epochs,total_reward,success,unique_cells,epsilon
std::string episode_csv_row(const EpisodeRecord& r);
/// Parses a metrics CSV; throws std::runtime_error naming the bad row.
std::vector<EpisodeRecord> read_metrics_csv(const std::filesystem::path& path);

struct TrainOptions {
  bool allow_resume = true; // continue from out_dir's manifest when present
  int learn_threads = 1;    // concurrent per-agent updates (disjoint state)
  bool verbose = false;
};

struct TrainResult {
  std::vector<EpisodeRecord> log;
  std::filesystem::path manifest_path;
  double wall_clock_seconds = 0.0;
};

/// Runs the full training pipeline for one agent kind: per episode, sample
/// a train map, reset with a fresh noise scale, roll out eps-greedy joint
/// actions and store per-agent transitions; after t_init episodes each
/// epoch additionally performs one learning update per agent. Writes
/// metrics.csv, per-agent checkpoints and manifest.json under out_dir.
TrainResult train(const Hyperparameters& hp, const MapSet& maps, AgentKind kind,
                  std::uint64_t seed, const std::filesystem::path& out_dir,
                  const TrainOptions& opts = {});

/// Pre-drawn evaluation episode: which test map, where each agent starts,
/// and the environment seed (noise scale + observation noise).
struct EvalEpisode {
  int map_index = 0;
  std::vector<Cell> starts;
  std::uint64_t env_seed = 0;
};

struct EvalSchedule {
  int agents = 0;
  std::vector<EvalEpisode> episodes;
  std::uint64_t hash = 0; // FNV-1a over every entry; equal across models
};

/// Uniformly samples maps and starts for `episodes` evaluation episodes.
/// Depends only on (maps, episodes, agents, seed), never on a model.
EvalSchedule make_eval_schedule(const MapSet& maps, int episodes, int agents,
                                std::uint64_t seed);

/// A policy under evaluation: per-agent networks, or the random baseline.
struct Policy {
  AgentKind kind = AgentKind::Random;
  int agents = 2;
  std::vector<AgentNet> nets; // empty for Random
};

Policy random_policy(int agents);
/// Loads the per-agent checkpoints referenced by a training manifest.
Policy load_policy(const std::filesystem::path& manifest_path);

struct KpiReport {
  int episodes = 0;
  double success_rate = 0.0;         // percent
  double avg_epochs = 0.0;
  double avg_reward = 0.0;
  double wall_clock_seconds = 0.0;   // reported, never asserted
  double exploration_fraction = 0.0; // percent of grid cells, mean over successes
  std::uint64_t schedule_hash = 0;
};

/// Greedy evaluation (eps = 0) over a fixed schedule. Episodes are
/// independent; up to max_threads run concurrently with deterministic,
/// order-fixed aggregation.
KpiReport evaluate(const Policy& policy, const MapSet& maps, const EvalSchedule& schedule,
                   const EnvConfig& env_cfg, int max_threads = 1);

struct CompareRow {
  std::string name;
  KpiReport kpi;
};

/// Evaluates every model on one shared schedule and ranks by success rate,
/// then average epochs. Mismatched agent counts are a config error unless
/// allow_varied_agents is set (each count then gets its own start draws).
std::vector<CompareRow> compare(std::vector<std::pair<std::string, Policy>> models,
                                const MapSet& maps, int episodes, std::uint64_t seed,
                                const EnvConfig& env_cfg, bool allow_varied_agents = false,
                                int max_threads = 1);

std::string format_kpi_table(const std::vector<CompareRow>& rows);

} // namespace plumerl
