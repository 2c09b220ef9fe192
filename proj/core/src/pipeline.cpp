#include "plumerl/pipeline.hpp"

#include "plumerl/map_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace plumerl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kMapStream = 1;
constexpr std::uint64_t kInitStream = 0x100;
constexpr std::uint64_t kActStream = 0x200;
constexpr std::uint64_t kLearnStream = 0x300;
constexpr std::uint64_t kEnvStream = 0x10000;
constexpr std::uint64_t kEvalScheduleStream = 0x20000;
constexpr std::uint64_t kEvalActStream = 0x5000;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

std::string episode_csv_header() {
  return "episode,map_id,epochs,total_reward,success,unique_cells,epsilon";
}

std::string episode_csv_row(const EpisodeRecord& r) {
  std::ostringstream out;
  out << r.episode << ',' << r.map_id << ',' << r.epochs << ',' << format_double(r.total_reward)
      << ',' << (r.success ? 1 : 0) << ',' << r.unique_cells << ',' << format_double(r.eps);
  return out.str();
}

std::vector<EpisodeRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != episode_csv_header())
    throw std::runtime_error("metrics: bad header row 1 in " + path.string());
  std::vector<EpisodeRecord> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    row_no += 1;
    if (line.empty()) continue;
    std::array<std::string, 7> fields;
    std::size_t start = 0;
    for (int f = 0; f < 7; ++f) {
      const std::size_t comma = line.find(',', start);
      if (f < 6) {
        if (comma == std::string::npos)
          throw std::runtime_error("metrics: row " + std::to_string(row_no) + ": expected 7 fields");
        fields[f] = line.substr(start, comma - start);
        start = comma + 1;
      } else {
        if (comma != std::string::npos)
          throw std::runtime_error("metrics: row " + std::to_string(row_no) + ": too many fields");
        fields[f] = line.substr(start);
      }
    }
    try {
      EpisodeRecord r;
      r.episode = std::stol(fields[0]);
      r.map_id = std::stoi(fields[1]);
      r.epochs = std::stoi(fields[2]);
      r.total_reward = std::stod(fields[3]);
      r.success = std::stoi(fields[4]) != 0;
      r.unique_cells = static_cast<std::size_t>(std::stoul(fields[5]));
      r.eps = std::stod(fields[6]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw std::runtime_error("metrics: row " + std::to_string(row_no) + ": unparsable field");
    }
  }
  return rows;
}

namespace {

struct EpisodeRollout {
  int epochs = 0;
  double total_reward = 0.0;
  bool success = false;
  std::size_t unique_cells = 0;
};

/// Greedy (or random-kind) rollout of one evaluation episode.
EpisodeRollout run_eval_episode(const Policy& policy, const PlumeField& field,
                                const EvalEpisode& ep, const EnvConfig& env_cfg) {
  Environment env(env_cfg);
  EnvStep step = env.reset(field, ep.env_seed, ep.starts);
  std::vector<double> obs = Environment::flatten(step.joint_observation);

  const int n = env_cfg.agents;
  std::vector<LstmState> hidden;
  std::vector<int> prev_action(n, -1);
  std::vector<Rng> act_rngs;
  if (policy.kind == AgentKind::Random) {
    for (int a = 0; a < n; ++a) act_rngs.push_back(Rng(ep.env_seed).child(kEvalActStream + a));
  } else {
    for (int a = 0; a < n; ++a)
      hidden.push_back(lstm_zero_state(1, policy.nets[a].online.config.hidden));
  }

  Rng greedy_rng(0); // never consumed at eps = 0
  AgentNet random_net;
  random_net.kind = AgentKind::Random;
  LstmState no_state;
  EpisodeRollout out;
  std::vector<Action> joint(n, Action::Left);
  while (!step.done) {
    for (int a = 0; a < n; ++a) {
      if (policy.kind == AgentKind::Random)
        joint[a] = act(random_net, obs, prev_action[a], no_state, 1.0, act_rngs[a]);
      else
        joint[a] = act(policy.nets[a], obs, prev_action[a], hidden[a], 0.0, greedy_rng);
      prev_action[a] = static_cast<int>(joint[a]);
    }
    step = env.step(joint);
    obs = Environment::flatten(step.joint_observation);
    out.total_reward += step.reward;
  }
  out.epochs = env.epoch();
  out.success = env.success();
  out.unique_cells = env.unique_cells_visited();
  return out;
}

} // namespace

EvalSchedule make_eval_schedule(const MapSet& maps, int episodes, int agents,
                                std::uint64_t seed) {
  if (maps.test.empty()) throw std::invalid_argument("eval schedule: empty test set");
  if (episodes < 1 || agents < 1)
    throw std::invalid_argument("eval schedule: episodes and agents must be positive");

  Rng rng = Rng(seed).child(kEvalScheduleStream);
  EvalSchedule sched;
  sched.agents = agents;
  sched.episodes.reserve(episodes);
  std::uint64_t h = 1469598103934665603ull;
  for (int e = 0; e < episodes; ++e) {
    EvalEpisode ep;
    ep.map_index = rng.uniform_int(0, static_cast<int>(maps.test.size()) - 1);
    const GridSpec& g = maps.test[ep.map_index].grid;
    for (int a = 0; a < agents; ++a)
      ep.starts.push_back({rng.uniform_int(0, g.nx - 1), rng.uniform_int(0, g.ny - 1),
                           rng.uniform_int(0, g.nz - 1)});
    ep.env_seed = rng.next_u64();
    h = fnv1a(&ep.map_index, sizeof(ep.map_index), h);
    h = fnv1a(&ep.env_seed, sizeof(ep.env_seed), h);
    for (const Cell& c : ep.starts) h = fnv1a(&c, sizeof(c), h);
    sched.episodes.push_back(std::move(ep));
  }
  sched.hash = h;
  return sched;
}

Policy random_policy(int agents) {
  Policy p;
  p.kind = AgentKind::Random;
  p.agents = agents;
  return p;
}

KpiReport evaluate(const Policy& policy, const MapSet& maps, const EvalSchedule& schedule,
                   const EnvConfig& env_cfg, int max_threads) {
  if (schedule.agents != env_cfg.agents || policy.agents != env_cfg.agents)
    throw std::invalid_argument("evaluate: agent counts disagree");
  if (policy.kind != AgentKind::Random) {
    if (static_cast<int>(policy.nets.size()) != policy.agents)
      throw std::invalid_argument("evaluate: policy needs one network per agent");
    for (const AgentNet& net : policy.nets)
      if (net.online.config.obs_dim != Environment::observation_dim(policy.agents))
        throw std::invalid_argument("evaluate: checkpoint observation width does not match agent count");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const int n = static_cast<int>(schedule.episodes.size());
  std::vector<EpisodeRollout> results(n);

  const int threads = std::max(1, std::min(max_threads, n));
  if (threads == 1) {
    for (int e = 0; e < n; ++e)
      results[e] = run_eval_episode(policy, maps.test[schedule.episodes[e].map_index],
                                    schedule.episodes[e], env_cfg);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int e = w; e < n; e += threads)
          results[e] = run_eval_episode(policy, maps.test[schedule.episodes[e].map_index],
                                        schedule.episodes[e], env_cfg);
      });
    for (auto& th : pool) th.join();
  }

  KpiReport kpi;
  kpi.episodes = n;
  kpi.schedule_hash = schedule.hash;
  const double grid_cells = static_cast<double>(maps.test.front().grid.cell_count());
  int successes = 0;
  double explore_sum = 0.0;
  for (const EpisodeRollout& r : results) {
    kpi.avg_epochs += r.epochs;
    kpi.avg_reward += r.total_reward;
    if (r.success) {
      successes += 1;
      explore_sum += 100.0 * static_cast<double>(r.unique_cells) / grid_cells;
    }
  }
  kpi.avg_epochs /= n;
  kpi.avg_reward /= n;
  kpi.success_rate = 100.0 * successes / n;
  kpi.exploration_fraction = successes > 0 ? explore_sum / successes : 0.0;
  kpi.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return kpi;
}

std::vector<CompareRow> compare(std::vector<std::pair<std::string, Policy>> models,
                                const MapSet& maps, int episodes, std::uint64_t seed,
                                const EnvConfig& env_cfg, bool allow_varied_agents,
                                int max_threads) {
  if (models.size() < 2) throw std::invalid_argument("compare: need at least two models");
  for (const auto& [name, policy] : models)
    if (policy.agents != models.front().second.agents && !allow_varied_agents)
      throw std::invalid_argument(
          "compare: agent counts differ (pass allow_varied_agents to sweep N)");

  std::vector<CompareRow> rows;
  for (const auto& [name, policy] : models) {
    const EvalSchedule sched = make_eval_schedule(maps, episodes, policy.agents, seed);
    EnvConfig cfg = env_cfg;
    cfg.agents = policy.agents;
    rows.push_back({name, evaluate(policy, maps, sched, cfg, max_threads)});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    if (a.kpi.success_rate != b.kpi.success_rate) return a.kpi.success_rate > b.kpi.success_rate;
    if (a.kpi.avg_epochs != b.kpi.avg_epochs) return a.kpi.avg_epochs < b.kpi.avg_epochs;
    return a.name < b.name;
  });
  return rows;
}

std::string format_kpi_table(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-24s %12s %12s %12s %14s %12s\n", "model", "success",
                "avg_epochs", "avg_reward", "explore_frac", "episodes");
  out << buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%-24s %11.2f%% %12.2f %12.2f %13.3f%% %12d\n",
                  row.name.c_str(), row.kpi.success_rate, row.kpi.avg_epochs,
                  row.kpi.avg_reward, row.kpi.exploration_fraction, row.kpi.episodes);
    out << buf;
  }
  return out.str();
}

namespace {

json manifest_json(const Hyperparameters& hp, AgentKind kind, std::uint64_t seed,
                   long episodes_done, const std::vector<std::string>& checkpoints,
                   double wall_clock) {
  json m;
  m["kind"] = to_string(kind);
  m["seed"] = seed;
  m["agents"] = hp.agents;
  m["episodes_done"] = episodes_done;
  m["total_episodes"] = hp.total_episodes;
  m["checkpoints"] = checkpoints;
  m["metrics"] = "metrics.csv";
  m["config_text"] = config_to_text(hp);
  m["wall_clock_seconds"] = wall_clock;
  m["updated_utc"] = utc_now();
  return m;
}

void write_manifest(const std::filesystem::path& path, const json& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << m.dump(2) << '\n';
}

/// Rewrites metrics.csv keeping only rows for episodes < keep_episodes.
std::vector<EpisodeRecord> truncate_metrics(const std::filesystem::path& path,
                                            long keep_episodes) {
  std::vector<EpisodeRecord> rows;
  if (std::filesystem::exists(path)) {
    for (const EpisodeRecord& r : read_metrics_csv(path))
      if (r.episode < keep_episodes) rows.push_back(r);
  }
  std::ofstream out(path, std::ios::trunc);
  out << episode_csv_header() << '\n';
  for (const EpisodeRecord& r : rows) out << episode_csv_row(r) << '\n';
  return rows;
}

} // namespace

TrainResult train(const Hyperparameters& hp, const MapSet& maps, AgentKind kind,
                  std::uint64_t seed, const std::filesystem::path& out_dir,
                  const TrainOptions& opts) {
  hp.validate();
  if (maps.train.empty()) throw std::invalid_argument("train: empty train map set");
  std::filesystem::create_directories(out_dir);

  const auto t0 = std::chrono::steady_clock::now();
  const Rng base(seed);
  const int n_agents = hp.agents;
  const int obs_dim = Environment::observation_dim(n_agents);
  const bool learner_kind = kind != AgentKind::Random;

  NetworkConfig net_cfg;
  net_cfg.obs_dim = obs_dim;
  net_cfg.act_dim = kActionCount;
  net_cfg.obs_embed = hp.obs_embed;
  net_cfg.act_embed = hp.act_embed;
  net_cfg.hidden = hp.hidden_size;
  net_cfg.outputs = kActionCount;

  std::vector<AgentNet> agents;
  std::vector<ReplayBuffer> replays;
  std::vector<std::string> checkpoint_names;
  if (learner_kind) {
    for (int a = 0; a < n_agents; ++a) {
      Rng init_rng = base.child(kInitStream + a);
      agents.push_back(make_agent(kind, net_cfg, hp.alpha, init_rng));
      replays.emplace_back(hp.buffer_capacity);
      checkpoint_names.push_back("agent" + std::to_string(a) + ".ckpt");
    }
  }

  const std::filesystem::path manifest_path = out_dir / "manifest.json";
  const std::filesystem::path metrics_path = out_dir / "metrics.csv";

  // Manifest-driven resume: pick up from the last checkpoint when the run
  // matches; replay buffers refill from scratch.
  long start_episode = 0;
  if (opts.allow_resume && std::filesystem::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    json m;
    in >> m;
    if (m.at("kind").get<std::string>() != to_string(kind) ||
        m.at("seed").get<std::uint64_t>() != seed ||
        m.at("config_text").get<std::string>() != config_to_text(hp))
      throw std::runtime_error("train: out dir holds a different run; refusing to resume");
    start_episode = m.at("episodes_done").get<long>();
    if (start_episode >= hp.total_episodes) start_episode = hp.total_episodes;
    for (int a = 0; a < n_agents && learner_kind && start_episode > 0; ++a)
      agents[a] = load_agent(out_dir / checkpoint_names[a]).agent;
  }

  std::vector<EpisodeRecord> log = truncate_metrics(metrics_path, start_episode);
  std::ofstream csv(metrics_path, std::ios::app);
  if (!csv) throw std::runtime_error("cannot open " + metrics_path.string());

  Environment env(
      EnvConfig{n_agents, hp.max_epochs, hp.noise_k_min, hp.noise_k_max});
  const EpsilonSchedule eps_sched{hp.eps_max, hp.eps_min, hp.lambda, hp.t_init};
  const LearnConfig learn_cfg{hp.batch_size, hp.seq_len, hp.gamma, hp.tau, hp.clip_norm};

  const auto save_all = [&](long episodes_done) {
    for (int a = 0; a < n_agents && learner_kind; ++a) {
      json extra;
      extra["agent_index"] = a;
      extra["episodes_done"] = episodes_done;
      extra["seed"] = seed;
      save_agent(agents[a], extra.dump(), out_dir / checkpoint_names[a]);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(manifest_path,
                   manifest_json(hp, kind, seed, episodes_done, checkpoint_names, wall));
  };

  for (long e = start_episode; e < hp.total_episodes; ++e) {
    const double eps = epsilon(e, eps_sched);
    const int map_id = base.child(kMapStream).child(e).uniform_int(
        0, static_cast<int>(maps.train.size()) - 1);
    const std::uint64_t env_seed = base.child(kEnvStream + e).seed();

    EnvStep step = env.reset(maps.train[map_id], env_seed);
    std::vector<double> obs = Environment::flatten(step.joint_observation);

    std::vector<LstmState> hidden;
    std::vector<int> prev_action(n_agents, -1);
    std::vector<Rng> act_rngs;
    std::vector<Rng> learn_rngs;
    for (int a = 0; a < n_agents; ++a) {
      act_rngs.push_back(base.child(kActStream + a).child(e));
      learn_rngs.push_back(base.child(kLearnStream + a).child(e));
      if (learner_kind) hidden.push_back(lstm_zero_state(1, hp.hidden_size));
    }

    const bool learning = learner_kind && e >= hp.t_init;
    // During the pure-exploration phase every action is random, so the
    // network forward (which consumes no rng) can be skipped wholesale.
    const bool skip_forward = !learner_kind || eps >= 1.0;

    double total_reward = 0.0;
    std::vector<Action> joint(n_agents, Action::Left);
    while (!step.done) {
      for (int a = 0; a < n_agents; ++a) {
        if (kind == AgentKind::Random) {
          joint[a] = static_cast<Action>(act_rngs[a].uniform_int(0, kActionCount - 1));
        } else if (skip_forward) {
          act_rngs[a].uniform(); // same draw pattern as select_action at eps = 1
          joint[a] = static_cast<Action>(act_rngs[a].uniform_int(0, kActionCount - 1));
        } else {
          joint[a] = act(agents[a], obs, prev_action[a], hidden[a], eps, act_rngs[a]);
        }
      }
      const EnvStep next = env.step(joint);
      const std::vector<double> next_obs = Environment::flatten(next.joint_observation);
      if (learner_kind) {
        for (int a = 0; a < n_agents; ++a) {
          Transition tr;
          tr.prev_action = static_cast<std::int8_t>(prev_action[a]);
          tr.observation = obs;
          tr.action = static_cast<std::int8_t>(joint[a]);
          tr.reward = next.reward;
          tr.next_observation = next_obs;
          tr.done = next.done;
          tr.episode_id = e;
          replays[a].push(std::move(tr));
        }
      }
      for (int a = 0; a < n_agents; ++a) prev_action[a] = static_cast<int>(joint[a]);
      obs = next_obs;
      total_reward += next.reward;
      step = next;

      if (learning) {
        if (opts.learn_threads > 1 && n_agents > 1) {
          std::vector<std::future<void>> futs;
          for (int a = 0; a < n_agents; ++a)
            futs.push_back(std::async(std::launch::async, [&, a] {
              learn_step(agents[a], replays[a], learn_cfg, learn_rngs[a]);
            }));
          for (auto& f : futs) f.get();
        } else {
          for (int a = 0; a < n_agents; ++a)
            learn_step(agents[a], replays[a], learn_cfg, learn_rngs[a]);
        }
      }
    }

    EpisodeRecord rec;
    rec.episode = e;
    rec.map_id = map_id;
    rec.epochs = env.epoch();
    rec.total_reward = total_reward;
    rec.success = env.success();
    rec.unique_cells = env.unique_cells_visited();
    rec.eps = eps;
    log.push_back(rec);
    csv << episode_csv_row(rec) << '\n';
    csv.flush();

    if ((e + 1) % hp.checkpoint_interval == 0 || e + 1 == hp.total_episodes) save_all(e + 1);
    if (opts.verbose && (e + 1) % 50 == 0) {
      double mean_r = 0.0;
      const std::size_t window = std::min<std::size_t>(50, log.size());
      for (std::size_t i = log.size() - window; i < log.size(); ++i)
        mean_r += log[i].total_reward;
      std::fprintf(stderr, "episode %ld/%ld eps=%.3f mean_reward(50)=%.1f\n", e + 1,
                   hp.total_episodes, eps, mean_r / window);
    }
  }
  if (start_episode >= hp.total_episodes) save_all(hp.total_episodes);

  TrainResult result;
  result.log = std::move(log);
  result.manifest_path = manifest_path;
  result.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

Policy load_policy(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
  json m;
  in >> m;
  Policy p;
  p.kind = agent_kind_from_string(m.at("kind").get<std::string>());
  p.agents = m.at("agents").get<int>();
  if (p.kind == AgentKind::Random) return p;
  const auto dir = manifest_path.parent_path();
  for (const auto& name : m.at("checkpoints"))
    p.nets.push_back(load_agent(dir / name.get<std::string>()).agent);
  if (static_cast<int>(p.nets.size()) != p.agents)
    throw std::runtime_error("manifest: checkpoint count != agent count");
  return p;
}

} // namespace plumerl
