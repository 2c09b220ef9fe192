#include "plumerl/agent.hpp"

#include "plumerl/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace plumerl {

using nlohmann::json;

bool is_action_conditioned(AgentKind k) {
  return k == AgentKind::ADRQN || k == AgentKind::ADDRQN;
}

bool uses_double_q(AgentKind k) {
  return k == AgentKind::DDRQN || k == AgentKind::ADDRQN;
}

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::DRQN: return "drqn";
    case AgentKind::DDRQN: return "ddrqn";
    case AgentKind::ADRQN: return "adrqn";
    case AgentKind::ADDRQN: return "addrqn";
    case AgentKind::Random: return "random";
  }
  return "?";
}

AgentKind agent_kind_from_string(const std::string& name) {
  if (name == "drqn") return AgentKind::DRQN;
  if (name == "ddrqn") return AgentKind::DDRQN;
  if (name == "adrqn") return AgentKind::ADRQN;
  if (name == "addrqn") return AgentKind::ADDRQN;
  if (name == "random") return AgentKind::Random;
  throw std::invalid_argument("unknown agent kind: " + name);
}

double epsilon(long episode, const EpsilonSchedule& s) {
  if (!(s.eps_max >= s.eps_min && s.eps_min >= 0.0))
    throw std::invalid_argument("epsilon schedule needs eps_max >= eps_min >= 0");
  if (!(s.lambda > 0.0)) throw std::invalid_argument("epsilon schedule needs lambda > 0");
  if (episode < s.t_init) return s.eps_max;
  const double t = static_cast<double>(episode - s.t_init);
  return s.eps_min + (s.eps_max - s.eps_min) * std::exp(-t / s.lambda);
}

namespace {

int argmax_row(const double* q, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (q[i] > q[best]) best = i; // strict: ties keep the lowest index
  return best;
}

} // namespace

Action select_action(std::span<const double> q, double eps, Rng& rng) {
  if (q.size() != kActionCount) throw std::invalid_argument("select_action: need 6 Q-values");
  for (double v : q)
    if (!std::isfinite(v)) throw std::domain_error("select_action: non-finite Q-value");
  if (eps > 0.0 && rng.uniform() < eps)
    return static_cast<Action>(rng.uniform_int(0, kActionCount - 1));
  return static_cast<Action>(argmax_row(q.data(), kActionCount));
}

AgentNet make_agent(AgentKind kind, const NetworkConfig& config, double alpha, Rng& rng) {
  AgentNet a;
  a.kind = kind;
  a.online = init_network(config, rng);
  a.target = a.online; // target starts as an exact copy
  a.adam = make_adam(a.online, alpha);
  return a;
}

void encode_action(int action_index, double* row, int act_dim) {
  std::fill(row, row + act_dim, 0.0);
  if (action_index >= 0) {
    if (action_index >= act_dim) throw std::invalid_argument("encode_action: index out of range");
    row[action_index] = 1.0;
  }
}

namespace {

/// Builds the per-step tensors for the next-observation stream: inputs are
/// (o_{t+1}, a_t), with the conditioning action zeroed for kinds that do
/// not take an action input.
void build_next_stream(const SequenceBatch& batch, bool conditioned,
                       std::vector<Tensor2>& obs_steps, std::vector<Tensor2>& act_steps) {
  const int B = batch.batch;
  const int L = batch.seq_len;
  obs_steps.assign(L, Tensor2(B, batch.obs_dim));
  act_steps.assign(L, Tensor2(B, kActionCount));
  for (int t = 0; t < L; ++t)
    for (int b = 0; b < B; ++b) {
      const std::size_t cell = batch.flat(b, t);
      const double* src = batch.next_obs_at(b, t);
      std::copy(src, src + batch.obs_dim, obs_steps[t].row(b));
      if (conditioned && batch.mask[cell])
        encode_action(batch.action[cell], act_steps[t].row(b), kActionCount);
    }
}

void build_current_stream(const SequenceBatch& batch, bool conditioned,
                          std::vector<Tensor2>& obs_steps, std::vector<Tensor2>& act_steps) {
  const int B = batch.batch;
  const int L = batch.seq_len;
  obs_steps.assign(L, Tensor2(B, batch.obs_dim));
  act_steps.assign(L, Tensor2(B, kActionCount));
  for (int t = 0; t < L; ++t)
    for (int b = 0; b < B; ++b) {
      const std::size_t cell = batch.flat(b, t);
      const double* src = batch.obs_at(b, t);
      std::copy(src, src + batch.obs_dim, obs_steps[t].row(b));
      if (conditioned && batch.mask[cell])
        encode_action(batch.prev_action[cell], act_steps[t].row(b), kActionCount);
    }
}

} // namespace

TargetBatch compute_targets(const SequenceBatch& batch, const AgentNet& agent, double gamma) {
  if (batch.batch < 1 || batch.seq_len < 1)
    throw std::invalid_argument("compute_targets: empty batch");
  const bool conditioned = is_action_conditioned(agent.kind);
  const int B = batch.batch;
  const int L = batch.seq_len;

  std::vector<Tensor2> obs_steps, act_steps;
  build_next_stream(batch, conditioned, obs_steps, act_steps);

  const LstmState zero = lstm_zero_state(B, agent.target.config.hidden);
  const auto q_target = q_forward(agent.target, obs_steps, act_steps, zero);
  std::vector<Tensor2> q_online;
  if (uses_double_q(agent.kind))
    q_online = q_forward(agent.online, obs_steps, act_steps, zero);

  TargetBatch out;
  out.batch = B;
  out.seq_len = L;
  const std::size_t cells = static_cast<std::size_t>(B) * L;
  out.action.assign(cells, 0);
  out.y.assign(cells, 0.0);
  out.mask.assign(cells, 0);

  for (int t = 0; t < L; ++t)
    for (int b = 0; b < B; ++b) {
      const std::size_t cell = batch.flat(b, t);
      out.action[cell] = batch.action[cell];
      out.mask[cell] = batch.mask[cell];
      if (!batch.mask[cell]) continue;
      if (batch.done[cell]) {
        out.y[cell] = batch.reward[cell];
        continue;
      }
      const double* qt = q_target[t].row(b);
      double bootstrap;
      if (uses_double_q(agent.kind)) {
        const int a_star = argmax_row(q_online[t].row(b), kActionCount);
        bootstrap = qt[a_star];
      } else {
        bootstrap = qt[argmax_row(qt, kActionCount)];
      }
      out.y[cell] = batch.reward[cell] + gamma * bootstrap;
    }
  return out;
}

Action act(const AgentNet& agent, std::span<const double> joint_obs, int prev_action,
           LstmState& state, double eps, Rng& rng) {
  if (agent.kind == AgentKind::Random)
    return static_cast<Action>(rng.uniform_int(0, kActionCount - 1));

  const NetworkConfig& cfg = agent.online.config;
  if (static_cast<int>(joint_obs.size()) != cfg.obs_dim)
    throw std::invalid_argument("act: observation size mismatch");
  std::vector<Tensor2> obs_steps(1, Tensor2(1, cfg.obs_dim));
  std::vector<Tensor2> act_steps(1, Tensor2(1, cfg.act_dim));
  std::copy(joint_obs.begin(), joint_obs.end(), obs_steps[0].row(0));
  if (is_action_conditioned(agent.kind))
    encode_action(prev_action, act_steps[0].row(0), cfg.act_dim);

  LstmState next;
  const auto q = q_forward(agent.online, obs_steps, act_steps, state, &next);
  state = std::move(next);
  return select_action(std::span<const double>(q[0].row(0), kActionCount), eps, rng);
}

double learn_step(AgentNet& agent, const ReplayBuffer& replay, const LearnConfig& cfg,
                  Rng& rng) {
  if (agent.kind == AgentKind::Random)
    throw std::logic_error("learn_step: random agents do not learn");
  const SequenceBatch batch = replay.sample_sequences(cfg.batch_size, cfg.seq_len, rng);
  const TargetBatch targets = compute_targets(batch, agent, cfg.gamma);

  std::vector<Tensor2> obs_steps, act_steps;
  build_current_stream(batch, is_action_conditioned(agent.kind), obs_steps, act_steps);
  const LstmState zero = lstm_zero_state(batch.batch, agent.online.config.hidden);
  ForwardCache cache;
  q_forward(agent.online, obs_steps, act_steps, zero, nullptr, &cache);

  Gradients grads;
  const double loss = backward(agent.online, cache, targets, grads);
  clip_gradients(grads, cfg.clip_norm);
  adam_update(agent.online, grads, agent.adam);
  soft_update(agent.online, agent.target, cfg.tau);
  return loss;
}

void save_agent(const AgentNet& agent, const std::string& extra_metadata,
                const std::filesystem::path& path) {
  CheckpointBlocks ckpt;
  json meta;
  meta["kind"] = to_string(agent.kind);
  meta["config"] = {{"obs_dim", agent.online.config.obs_dim},
                    {"act_dim", agent.online.config.act_dim},
                    {"obs_embed", agent.online.config.obs_embed},
                    {"act_embed", agent.online.config.act_embed},
                    {"hidden", agent.online.config.hidden},
                    {"outputs", agent.online.config.outputs}};
  meta["adam"] = {{"alpha", agent.adam.alpha},
                  {"beta1", agent.adam.beta1},
                  {"beta2", agent.adam.beta2},
                  {"eps", agent.adam.eps},
                  {"step", agent.adam.step}};
  if (!extra_metadata.empty()) meta["extra"] = json::parse(extra_metadata);
  ckpt.metadata = meta.dump();
  pack_network(agent.online, "online.", ckpt);
  pack_network(agent.target, "target.", ckpt);
  pack_network(agent.adam.m, "adam.m.", ckpt);
  pack_network(agent.adam.v, "adam.v.", ckpt);
  save_checkpoint(ckpt, path);
}

LoadedAgent load_agent(const std::filesystem::path& path) {
  const CheckpointBlocks ckpt = load_checkpoint(path);
  const json meta = json::parse(ckpt.metadata);

  NetworkConfig config;
  config.obs_dim = meta.at("config").at("obs_dim").get<int>();
  config.act_dim = meta.at("config").at("act_dim").get<int>();
  config.obs_embed = meta.at("config").at("obs_embed").get<int>();
  config.act_embed = meta.at("config").at("act_embed").get<int>();
  config.hidden = meta.at("config").at("hidden").get<int>();
  config.outputs = meta.at("config").at("outputs").get<int>();

  LoadedAgent out;
  out.metadata = ckpt.metadata;
  out.agent.kind = agent_kind_from_string(meta.at("kind").get<std::string>());
  Rng scratch(0);
  out.agent.online = init_network(config, scratch);
  out.agent.target = init_network(config, scratch);
  unpack_network(ckpt, "online.", out.agent.online);
  unpack_network(ckpt, "target.", out.agent.target);
  out.agent.adam = make_adam(out.agent.online, meta.at("adam").at("alpha").get<double>());
  out.agent.adam.beta1 = meta.at("adam").at("beta1").get<double>();
  out.agent.adam.beta2 = meta.at("adam").at("beta2").get<double>();
  out.agent.adam.eps = meta.at("adam").at("eps").get<double>();
  out.agent.adam.step = meta.at("adam").at("step").get<long>();
  unpack_network(ckpt, "adam.m.", out.agent.adam.m);
  unpack_network(ckpt, "adam.v.", out.agent.adam.v);
  return out;
}

} // namespace plumerl
