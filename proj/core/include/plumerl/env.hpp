#pragma once

#include "plumerl/plume.hpp"
#include "plumerl/rng.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace plumerl {

/// Agent moves, one cell per step. Left/Right move along -x/+x,
/// Forward/Backward along +y/-y, Up/Down along +z/-z.
enum class Action : std::uint8_t {
  Left = 0,
  Right = 1,
  Up = 2,
  Down = 3,
  Forward = 4,
  Backward = 5,
};
inline constexpr int kActionCount = 6;

const char* to_string(Action a);

/// What one agent senses, already normalized for network input:
/// concentration is log1p-scaled by the field maximum into [0, 1], and each
/// position coordinate is divided by (cell count - 1) on its axis.
struct Observation {
  double concentration = 0.0;
  std::array<double, 3> position{};
};

/// Result of reset or one joint step.
struct EnvStep {
  std::vector<Observation> joint_observation; // agent-index order
  double reward = 0.0;
  bool done = false;
  bool success = false; // all sources found before the epoch cap
};

/// Moves one cell in the action's direction, staying in place on an axis
/// whenever the move would leave the grid.
Cell apply_action(const Cell& pos, Action a, const GridSpec& grid);

/// Global shared reward for simultaneously-applied new positions. Per agent,
/// in agent-index order: +10 for landing on a not-yet-visited source cell
/// (which becomes visited, so the lowest-index agent claims a simultaneous
/// discovery), 0 for an already-visited source cell, -1 otherwise. Returns
/// the summed reward and the grown visited set.
std::pair<double, std::set<std::size_t>> compute_reward(std::span<const Cell> new_positions,
                                                        std::span<const Cell> source_cells,
                                                        const std::set<std::size_t>& visited);

struct EnvConfig {
  int agents = 2;
  int max_epochs = 5000;
  double noise_k_min = 0.05;
  double noise_k_max = 0.10;
};

/// Joint reset/step semantics over one PlumeField. A single instance holds
/// mutable episode state and is not thread safe; run independent instances
/// for parallel episodes.
class Environment {
public:
  explicit Environment(EnvConfig cfg);

  /// Starts an episode with uniformly sampled start cells. The seed fixes
  /// the noise scale draw, the starts, and every observation-noise draw of
  /// the episode.
  EnvStep reset(const PlumeField& field, std::uint64_t seed);
  /// Starts an episode at explicit cells (bounds-checked).
  EnvStep reset(const PlumeField& field, std::uint64_t seed, std::span<const Cell> starts);

  /// Applies all moves simultaneously, scores the global reward, advances
  /// the epoch counter and samples fresh observation noise. Throws
  /// std::logic_error when called before reset or after done.
  EnvStep step(std::span<const Action> joint_action);

  int epoch() const { return epoch_; }
  int agents() const { return cfg_.agents; }
  int max_epochs() const { return cfg_.max_epochs; }
  double noise_k() const { return noise_k_; }
  bool done() const { return done_; }
  bool success() const { return success_; }
  const std::vector<Cell>& positions() const { return positions_; }
  const std::set<std::size_t>& visited() const { return visited_; }
  std::size_t unique_cells_visited() const { return unique_cells_.size(); }
  const PlumeField& field() const;

  /// Joint observation flattened to 4N reals in agent-index order:
  /// (concentration, x, y, z) per agent. This is the network input layout.
  static std::vector<double> flatten(const std::vector<Observation>& joint);
  static int observation_dim(int agents) { return 4 * agents; }

private:
  EnvStep begin_episode(const PlumeField& field, std::uint64_t seed,
                        std::optional<std::span<const Cell>> starts);
  std::vector<Observation> observe();

  EnvConfig cfg_;
  const PlumeField* field_ = nullptr;
  Rng rng_{0};
  double noise_k_ = 0.0;
  double log_max_ = 0.0; // log1p of the field maximum, observation scale
  std::vector<Cell> positions_;
  std::set<std::size_t> visited_;
  std::set<Cell> unique_cells_;
  int epoch_ = 0;
  bool active_ = false;
  bool done_ = false;
  bool success_ = false;
};

} // namespace plumerl
