#include "plumerl/replay.hpp"

#include <stdexcept>

namespace plumerl {

std::size_t SequenceBatch::valid_steps() const {
  std::size_t n = 0;
  for (auto m : mask) n += m;
  return n;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (t.episode_id < last_episode_id_)
    throw std::logic_error("replay push: episode_id decreased");
  if (t.observation.size() != t.next_observation.size())
    throw std::invalid_argument("replay push: observation sizes differ");
  last_episode_id_ = t.episode_id;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

SequenceBatch ReplayBuffer::sample_sequences(int batch, int seq_len, Rng& rng) const {
  if (items_.empty()) throw std::runtime_error("replay buffer not ready: no transitions stored");
  if (batch < 1 || seq_len < 1)
    throw std::invalid_argument("sample_sequences: batch and seq_len must be positive");

  const int obs_dim = static_cast<int>(items_.front().observation.size());
  SequenceBatch out;
  out.batch = batch;
  out.seq_len = seq_len;
  out.obs_dim = obs_dim;
  const std::size_t cells = static_cast<std::size_t>(batch) * seq_len;
  out.obs.assign(cells * obs_dim, 0.0);
  out.next_obs.assign(cells * obs_dim, 0.0);
  out.prev_action.assign(cells, -1);
  out.action.assign(cells, 0);
  out.reward.assign(cells, 0.0);
  out.done.assign(cells, 0);
  out.mask.assign(cells, 0);

  for (int b = 0; b < batch; ++b) {
    const std::size_t start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(items_.size()) - 1));
    const std::int64_t episode = items_[start].episode_id;
    for (int t = 0; t < seq_len; ++t) {
      const std::size_t idx = start + t;
      if (idx >= items_.size() || items_[idx].episode_id != episode) break;
      const Transition& tr = items_[idx];
      const std::size_t cell = out.flat(b, t);
      std::copy(tr.observation.begin(), tr.observation.end(),
                out.obs.begin() + cell * obs_dim);
      std::copy(tr.next_observation.begin(), tr.next_observation.end(),
                out.next_obs.begin() + cell * obs_dim);
      out.prev_action[cell] = tr.prev_action;
      out.action[cell] = tr.action;
      out.reward[cell] = tr.reward;
      out.done[cell] = tr.done ? 1 : 0;
      out.mask[cell] = 1;
      if (tr.done) break; // episode boundary: stop even if ids continue
    }
  }
  return out;
}

} // namespace plumerl
