#pragma once

#include "plumerl/env.hpp"
#include "plumerl/nn.hpp"
#include "plumerl/replay.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace plumerl {

/// Recurrent Q-learning variants plus the random-walk baseline. The
/// action-conditioned kinds feed the previous action into the network; the
/// double kinds select bootstrap actions with the online network and
/// evaluate them with the target network.
enum class AgentKind : std::uint8_t { DRQN, DDRQN, ADRQN, ADDRQN, Random };

bool is_action_conditioned(AgentKind k);
bool uses_double_q(AgentKind k);
std::string to_string(AgentKind k);
AgentKind agent_kind_from_string(const std::string& name);

/// Exponential exploration decay with a fixed pure-exploration prefix.
struct EpsilonSchedule {
  double eps_max = 1.0;
  double eps_min = 0.05;
  double lambda = 100.0;
  long t_init = 22000;
};

/// eps_max for t < t_init, then
/// eps_min + (eps_max - eps_min) * exp(-(t - t_init)/lambda).
double epsilon(long episode, const EpsilonSchedule& s);

/// eps-greedy over a Q row: uniform with probability eps, otherwise the
/// argmax with ties broken toward the lowest action index.
Action select_action(std::span<const double> q, double eps, Rng& rng);

/// One agent's learnable state. The target network is only ever written by
/// soft_update, never by gradients.
struct AgentNet {
  AgentKind kind = AgentKind::ADDRQN;
  NetworkParams online;
  NetworkParams target;
  AdamState adam;
};

AgentNet make_agent(AgentKind kind, const NetworkConfig& config, double alpha, Rng& rng);

/// One-hot encode an action into an existing row; index < 0 leaves the row
/// zero (the "no previous action" encoding).
void encode_action(int action_index, double* row, int act_dim);

/// Bootstrap targets for a sampled batch: y = r on terminal steps,
/// otherwise r + gamma * (double-Q or max-Q bootstrap depending on kind),
/// with hidden states obtained by unrolling over the next-observation
/// stream from a zero state. Masked steps get y = 0.
TargetBatch compute_targets(const SequenceBatch& batch, const AgentNet& agent, double gamma);

/// Policy step: one network evaluation threaded through `state`, then
/// eps-greedy selection. Random agents ignore the network and the state.
Action act(const AgentNet& agent, std::span<const double> joint_obs, int prev_action,
           LstmState& state, double eps, Rng& rng);

/// Hyperparameters consumed by one gradient update.
struct LearnConfig {
  int batch_size = 32;
  int seq_len = 16;
  double gamma = 0.999;
  double tau = 0.01;
  double clip_norm = 0.0; // <= 0 disables clipping
};

/// One Algorithm-style update: sample, targets, backward, Adam, soft
/// update. Returns the masked MSE loss.
double learn_step(AgentNet& agent, const ReplayBuffer& replay, const LearnConfig& cfg,
                  Rng& rng);

/// Agent checkpoint: online/target/Adam tensors plus a JSON metadata string
/// (kind, network config, Adam scalars, caller-supplied extras).
void save_agent(const AgentNet& agent, const std::string& extra_metadata,
                const std::filesystem::path& path);
struct LoadedAgent {
  AgentNet agent;
  std::string metadata;
};
LoadedAgent load_agent(const std::filesystem::path& path);

} // namespace plumerl
