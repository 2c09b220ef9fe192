#pragma once

#include "plumerl/env.hpp"
#include "plumerl/rng.hpp"

#include <cstdint>
#include <deque>
#include <vector>

namespace plumerl {

/// One agent-step of experience. Observations are the flattened joint
/// observation (4N reals); prev_action is -1 at the first step of an
/// episode, where the conditioning input is the all-zero vector.
struct Transition {
  std::int8_t prev_action = -1;
  std::vector<double> observation;
  std::int8_t action = 0;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool done = false;
  std::int64_t episode_id = 0;
};

/// B contiguous within-episode sequences of up to L steps, struct-of-arrays.
/// mask[b*L+t] == 1 marks a real transition; padded tail steps are zero and
/// must contribute nothing downstream.
struct SequenceBatch {
  int batch = 0;
  int seq_len = 0;
  int obs_dim = 0;
  std::vector<double> obs;              // batch*seq_len*obs_dim
  std::vector<double> next_obs;         // batch*seq_len*obs_dim
  std::vector<std::int8_t> prev_action; // -1 = none
  std::vector<std::int8_t> action;
  std::vector<double> reward;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> mask;

  std::size_t flat(int b, int t) const {
    return static_cast<std::size_t>(b) * seq_len + t;
  }
  const double* obs_at(int b, int t) const { return obs.data() + flat(b, t) * obs_dim; }
  const double* next_obs_at(int b, int t) const {
    return next_obs.data() + flat(b, t) * obs_dim;
  }
  std::size_t valid_steps() const;
};

/// Per-agent FIFO experience store serving uniformly sampled fixed-length
/// contiguous sequences. Single writer, single reader.
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Appends one transition, evicting the oldest when full. Episode ids
  /// must be nondecreasing across pushes (std::logic_error otherwise).
  void push(Transition t);

  /// Draws B start indices uniformly over all stored transitions. Each
  /// sequence runs from its start to the end of its episode or L steps,
  /// whichever is first; shorter sequences are zero-padded and masked.
  /// Throws std::runtime_error when the buffer is empty.
  SequenceBatch sample_sequences(int batch, int seq_len, Rng& rng) const;

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& at(std::size_t logical_index) const { return items_[logical_index]; }

private:
  std::size_t capacity_;
  std::deque<Transition> items_; // oldest at front
  std::int64_t last_episode_id_ = -1;
};

} // namespace plumerl
