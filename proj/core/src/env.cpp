#include "plumerl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plumerl {

const char* to_string(Action a) {
  switch (a) {
    case Action::Left: return "Left";
    case Action::Right: return "Right";
    case Action::Up: return "Up";
    case Action::Down: return "Down";
    case Action::Forward: return "Forward";
    case Action::Backward: return "Backward";
  }
  return "?";
}

Cell apply_action(const Cell& pos, Action a, const GridSpec& grid) {
  Cell p = pos;
  switch (a) {
    case Action::Left: p.x -= 1; break;
    case Action::Right: p.x += 1; break;
    case Action::Up: p.z += 1; break;
    case Action::Down: p.z -= 1; break;
    case Action::Forward: p.y += 1; break;
    case Action::Backward: p.y -= 1; break;
  }
  p.x = std::clamp(p.x, 0, grid.nx - 1);
  p.y = std::clamp(p.y, 0, grid.ny - 1);
  p.z = std::clamp(p.z, 0, grid.nz - 1);
  return p;
}

std::pair<double, std::set<std::size_t>> compute_reward(std::span<const Cell> new_positions,
                                                        std::span<const Cell> source_cells,
                                                        const std::set<std::size_t>& visited) {
  std::set<std::size_t> v = visited;
  double reward = 0.0;
  for (const Cell& pos : new_positions) {
    bool discovered = false;
    bool on_visited = false;
    for (std::size_t j = 0; j < source_cells.size(); ++j) {
      if (pos != source_cells[j]) continue;
      if (v.contains(j)) {
        on_visited = true;
      } else if (!discovered) {
        v.insert(j);
        discovered = true;
      }
    }
    if (discovered)
      reward += 10.0;
    else if (!on_visited)
      reward -= 1.0;
    // on a previously visited source: contributes 0
  }
  return {reward, std::move(v)};
}

Environment::Environment(EnvConfig cfg) : cfg_(cfg) {
  if (cfg_.agents < 1) throw std::invalid_argument("environment needs at least one agent");
  if (cfg_.max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
  if (cfg_.noise_k_min < 0.0 || cfg_.noise_k_max > 1.0 || cfg_.noise_k_min > cfg_.noise_k_max)
    throw std::invalid_argument("noise range must satisfy 0 <= k_min <= k_max <= 1");
}

const PlumeField& Environment::field() const {
  if (!field_) throw std::logic_error("environment has no field; call reset first");
  return *field_;
}

EnvStep Environment::reset(const PlumeField& field, std::uint64_t seed) {
  return begin_episode(field, seed, std::nullopt);
}

EnvStep Environment::reset(const PlumeField& field, std::uint64_t seed,
                           std::span<const Cell> starts) {
  return begin_episode(field, seed, starts);
}

EnvStep Environment::begin_episode(const PlumeField& field, std::uint64_t seed,
                                   std::optional<std::span<const Cell>> starts) {
  field.grid.validate();
  if (starts && static_cast<int>(starts->size()) != cfg_.agents)
    throw std::invalid_argument("start position count must equal agent count");

  field_ = &field;
  rng_ = Rng(seed);
  noise_k_ = rng_.uniform(cfg_.noise_k_min, cfg_.noise_k_max);
  log_max_ = std::log1p(field.max_concentration());

  positions_.clear();
  if (starts) {
    for (const Cell& c : *starts) {
      if (!field.grid.contains(c))
        throw std::invalid_argument("start position outside grid");
      positions_.push_back(c);
    }
  } else {
    for (int i = 0; i < cfg_.agents; ++i)
      positions_.push_back({rng_.uniform_int(0, field.grid.nx - 1),
                            rng_.uniform_int(0, field.grid.ny - 1),
                            rng_.uniform_int(0, field.grid.nz - 1)});
  }

  visited_.clear();
  unique_cells_.clear();
  unique_cells_.insert(positions_.begin(), positions_.end());
  epoch_ = 0;
  active_ = true;
  done_ = false;
  success_ = false;

  // Discovery is evaluated on step, never at reset.
  return {observe(), 0.0, false, false};
}

EnvStep Environment::step(std::span<const Action> joint_action) {
  if (!active_) throw std::logic_error("step before reset");
  if (done_) throw std::logic_error("step after episode is done");
  if (static_cast<int>(joint_action.size()) != cfg_.agents)
    throw std::invalid_argument("joint action length must equal agent count");

  for (int i = 0; i < cfg_.agents; ++i)
    positions_[i] = apply_action(positions_[i], joint_action[i], field_->grid);

  auto [reward, visited] = compute_reward(positions_, field_->source_cells, visited_);
  visited_ = std::move(visited);
  unique_cells_.insert(positions_.begin(), positions_.end());
  epoch_ += 1;

  const bool all_found = visited_.size() == field_->source_cells.size();
  done_ = all_found || epoch_ >= cfg_.max_epochs;
  success_ = all_found && epoch_ < cfg_.max_epochs;

  return {observe(), reward, done_, success_};
}

std::vector<Observation> Environment::observe() {
  const GridSpec& g = field_->grid;
  std::vector<Observation> joint;
  joint.reserve(positions_.size());
  for (const Cell& pos : positions_) {
    const double raw = field_->at(pos);
    const double noisy = apply_observation_noise(raw, noise_k_, rng_);
    Observation o;
    o.concentration =
        log_max_ > 0.0 ? std::clamp(std::log1p(std::max(noisy, 0.0)) / log_max_, 0.0, 1.0)
                       : 0.0;
    o.position = {static_cast<double>(pos.x) / (g.nx - 1),
                  static_cast<double>(pos.y) / (g.ny - 1),
                  static_cast<double>(pos.z) / (g.nz - 1)};
    joint.push_back(o);
  }
  return joint;
}

std::vector<double> Environment::flatten(const std::vector<Observation>& joint) {
  std::vector<double> flat;
  flat.reserve(joint.size() * 4);
  for (const Observation& o : joint) {
    flat.push_back(o.concentration);
    flat.push_back(o.position[0]);
    flat.push_back(o.position[1]);
    flat.push_back(o.position[2]);
  }
  return flat;
}

} // namespace plumerl
