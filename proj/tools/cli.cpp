#include "cli.hpp"

#include "plumerl/map_io.hpp"
#include "plumerl/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace plumerl::cli {

using nlohmann::json;

namespace {

int eval_threads(int episodes) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* cap = std::getenv("PLUME_MARL_THREADS")) {
    const int c = std::atoi(cap);
    if (c >= 1) threads = std::min(threads, c);
  }
  return std::min(threads, std::max(1, episodes));
}

struct CommonOpts {
  std::string profile = "desk";
  std::string config_file;
  std::uint64_t seed = 0;
  int agents = 0; // 0 = profile default
};

Hyperparameters resolve_hp(const CommonOpts& o) {
  Hyperparameters hp = profile_by_name(o.profile);
  if (!o.config_file.empty()) apply_config_file(hp, o.config_file);
  if (o.agents > 0) hp.agents = o.agents;
  hp.validate();
  return hp;
}

void add_common(CLI::App* cmd, CommonOpts& o, bool with_agents = true) {
  cmd->add_option("--profile", o.profile, "Named preset: full or desk")
      ->check(CLI::IsMember({"full", "desk"}));
  cmd->add_option("--config", o.config_file, "key = value overrides applied on the profile");
  cmd->add_option("--seed", o.seed, "Master seed; required, no wall-clock default")
      ->required();
  if (with_agents) cmd->add_option("--agents", o.agents, "Agent count override");
}

json kpi_json(const std::string& name, const KpiReport& k) {
  json row;
  row["name"] = name;
  row["episodes"] = k.episodes;
  row["success_rate"] = k.success_rate;
  row["avg_epochs"] = k.avg_epochs;
  row["avg_reward"] = k.avg_reward;
  row["exploration_fraction"] = k.exploration_fraction;
  row["schedule_hash"] = k.schedule_hash;
  return row;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_report(const std::filesystem::path& out_dir, const std::vector<CompareRow>& rows,
                  std::uint64_t seed, double wall_clock) {
  std::filesystem::create_directories(out_dir);
  const std::string table = format_kpi_table(rows);
  write_text(out_dir / "report.txt", table);
  json rep;
  rep["seed"] = seed;
  rep["models"] = json::array();
  for (const auto& row : rows) rep["models"].push_back(kpi_json(row.name, row.kpi));
  write_text(out_dir / "report.json", rep.dump(2) + "\n");
  // Wall clock and timestamps stay out of the deterministic report files.
  json manifest;
  manifest["wall_clock_seconds"] = wall_clock;
  manifest["generated_utc"] = [] {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
  }();
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << table;
}

Policy named_policy(const std::string& spec_str, int default_agents) {
  if (spec_str == "random") return random_policy(default_agents);
  return load_policy(spec_str);
}

int cmd_gen_maps(const CommonOpts& common, const std::string& out_dir) {
  const Hyperparameters hp = resolve_hp(common);
  const MapSet maps = generate_map_set(hp, common.seed);
  save_map_set(maps, out_dir);
  std::cout << "wrote " << maps.train.size() << " train + " << maps.test.size()
            << " test maps to " << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& kind_name,
              const std::string& maps_dir, const std::string& out_dir, bool quiet,
              int learn_threads) {
  const Hyperparameters hp = resolve_hp(common);
  const AgentKind kind = agent_kind_from_string(kind_name);
  const MapSet maps = load_map_set(maps_dir);
  TrainOptions opts;
  opts.verbose = !quiet;
  opts.learn_threads = learn_threads;
  const TrainResult result = train(hp, maps, kind, common.seed, out_dir, opts);
  std::cout << "trained " << kind_name << " for " << result.log.size() << " episodes ("
            << format_double(result.wall_clock_seconds) << " s); manifest at "
            << result.manifest_path.string() << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint,
             const std::string& kind_name, const std::string& maps_dir,
             const std::string& out_dir, int episodes) {
  const Hyperparameters hp = resolve_hp(common);
  const MapSet maps = load_map_set(maps_dir);
  if (episodes <= 0) episodes = hp.eval_episodes;

  Policy policy;
  std::string name;
  if (!checkpoint.empty()) {
    policy = load_policy(checkpoint);
    name = to_string(policy.kind);
  } else if (kind_name == "random") {
    policy = random_policy(hp.agents);
    name = "random";
  } else {
    throw CLI::ValidationError("eval", "pass --checkpoint MANIFEST or --kind random");
  }

  const EnvConfig env_cfg{policy.agents, hp.max_epochs, hp.noise_k_min, hp.noise_k_max};
  const EvalSchedule sched = make_eval_schedule(maps, episodes, policy.agents, common.seed);
  const KpiReport kpi =
      evaluate(policy, maps, sched, env_cfg, eval_threads(episodes));
  write_report(out_dir, {{name, kpi}}, common.seed, kpi.wall_clock_seconds);
  return 0;
}

int cmd_compare(const CommonOpts& common, const std::vector<std::string>& model_specs,
                const std::string& maps_dir, const std::string& out_dir, int episodes,
                bool allow_varied_agents) {
  const Hyperparameters hp = resolve_hp(common);
  const MapSet maps = load_map_set(maps_dir);
  if (episodes <= 0) episodes = hp.eval_episodes;

  std::vector<std::pair<std::string, Policy>> models;
  for (const std::string& spec_str : model_specs) {
    const auto eq = spec_str.find('=');
    const std::string name = eq == std::string::npos ? spec_str : spec_str.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec_str : spec_str.substr(eq + 1);
    models.emplace_back(name, named_policy(path, hp.agents));
  }

  const EnvConfig env_cfg{hp.agents, hp.max_epochs, hp.noise_k_min, hp.noise_k_max};
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = compare(std::move(models), maps, episodes, common.seed, env_cfg,
                            allow_varied_agents, eval_threads(episodes));
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_report(out_dir, rows, common.seed, wall);
  return 0;
}

int cmd_export_plots(const std::string& map_file, double z_meters, bool has_z,
                     const std::string& metrics_file, int window,
                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  if (!map_file.empty()) {
    const PlumeField field = load_map(map_file);
    const GridSpec& g = field.grid;
    if (has_z) {
      // Contour slice at the layer whose cell centers are nearest to z.
      const Cell ref = g.nearest_cell(g.origin_x, g.origin_y, z_meters);
      std::ostringstream out;
      out << "x,y,concentration\n";
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          const auto p = g.cell_center({i, j, ref.z});
          out << format_double(p[0]) << ',' << format_double(p[1]) << ','
              << format_double(field.at({i, j, ref.z})) << '\n';
        }
      char name[48];
      std::snprintf(name, sizeof(name), "slice_z%g.csv", z_meters);
      write_text(std::filesystem::path(out_dir) / name, out.str());
      std::cout << "wrote " << (std::filesystem::path(out_dir) / name).string() << "\n";
    } else {
      std::ostringstream out;
      out << "x,y,z,concentration\n";
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
          for (int k = 0; k < g.nz; ++k) {
            const auto p = g.cell_center({i, j, k});
            out << format_double(p[0]) << ',' << format_double(p[1]) << ','
                << format_double(p[2]) << ',' << format_double(field.at({i, j, k})) << '\n';
          }
      write_text(std::filesystem::path(out_dir) / "scatter.csv", out.str());
      std::cout << "wrote " << (std::filesystem::path(out_dir) / "scatter.csv").string()
                << "\n";
    }
  }
  if (!metrics_file.empty()) {
    const auto rows = learning_curve_rows(metrics_file, window);
    std::ostringstream out;
    for (const std::string& row : rows) out << row << '\n';
    write_text(std::filesystem::path(out_dir) / "learning_curve.csv", out.str());
    std::cout << "wrote " << (std::filesystem::path(out_dir) / "learning_curve.csv").string()
              << "\n";
  }
  if (map_file.empty() && metrics_file.empty())
    throw CLI::ValidationError("export-plots", "pass --map and/or --metrics");
  return 0;
}

} // namespace

std::vector<std::string> learning_curve_rows(const std::filesystem::path& metrics_csv,
                                             int window) {
  if (window < 1) throw std::runtime_error("learning curve: window must be >= 1");
  const std::vector<EpisodeRecord> records = read_metrics_csv(metrics_csv);
  std::vector<std::string> rows;
  rows.push_back(episode_csv_header() + ",reward_ma");
  double running = 0.0;
  std::vector<double> rewards;
  rewards.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    rewards.push_back(records[i].total_reward);
    running += rewards[i];
    if (i >= static_cast<std::size_t>(window)) running -= rewards[i - window];
    const std::size_t count = std::min<std::size_t>(window, i + 1);
    rows.push_back(episode_csv_row(records[i]) + "," + format_double(running / count));
  }
  return rows;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Gaussian plume simulator + recurrent multi-agent Q-learning pipeline"};
  app.require_subcommand(1);

  CommonOpts gen_common, train_common, eval_common, cmp_common;
  std::string gen_out, train_kind, train_maps, train_out, eval_ckpt, eval_kind, eval_maps,
      eval_out, cmp_maps, cmp_out, plots_map, plots_metrics, plots_out;
  std::vector<std::string> cmp_models;
  int eval_episodes = 0, cmp_episodes = 0, plots_window = 1, train_threads = 1;
  double plots_z = 0.0;
  bool train_quiet = false, cmp_varied = false;
  std::uint64_t plots_seed = 0;

  CLI::App* gen = app.add_subcommand("gen-maps", "Synthesize the train/test map set");
  add_common(gen, gen_common, false);
  gen->add_option("--out", gen_out, "Output directory")->required();

  CLI::App* tr = app.add_subcommand("train", "Train one agent kind on a map set");
  add_common(tr, train_common);
  tr->add_option("--kind", train_kind, "drqn|ddrqn|adrqn|addrqn|random")
      ->required()
      ->check(CLI::IsMember({"drqn", "ddrqn", "adrqn", "addrqn", "random"}));
  tr->add_option("--maps", train_maps, "Directory produced by gen-maps")->required();
  tr->add_option("--out", train_out, "Output directory")->required();
  tr->add_flag("--quiet", train_quiet, "Suppress progress lines");
  tr->add_option("--learn-threads", train_threads, "Concurrent per-agent updates");

  CLI::App* ev = app.add_subcommand("eval", "Greedy evaluation on the held-out test maps");
  add_common(ev, eval_common);
  ev->add_option("--checkpoint", eval_ckpt, "Training manifest.json to load");
  ev->add_option("--kind", eval_kind, "random (baseline without a checkpoint)")
      ->check(CLI::IsMember({"random"}));
  ev->add_option("--maps", eval_maps, "Directory produced by gen-maps")->required();
  ev->add_option("--episodes", eval_episodes, "Evaluation episode count");
  ev->add_option("--out", eval_out, "Output directory")->required();

  CLI::App* cmp = app.add_subcommand("compare", "Rank several models on one shared schedule");
  add_common(cmp, cmp_common);
  cmp->add_option("--model", cmp_models,
                  "name=manifest.json, or 'random'; repeat per model")
      ->required()
      ->expected(-2);
  cmp->add_option("--maps", cmp_maps, "Directory produced by gen-maps")->required();
  cmp->add_option("--episodes", cmp_episodes, "Evaluation episode count");
  cmp->add_option("--out", cmp_out, "Output directory")->required();
  cmp->add_flag("--allow-varied-agents", cmp_varied,
                "Permit models with different agent counts (N sweep)");

  CLI::App* plots = app.add_subcommand("export-plots", "Emit plot-ready CSV data");
  plots->add_option("--seed", plots_seed, "Master seed; required for interface uniformity")
      ->required();
  plots->add_option("--map", plots_map, "Map file to slice");
  CLI::Option* zopt = plots->add_option("--z", plots_z, "Slice height in meters");
  plots->add_option("--metrics", plots_metrics, "metrics.csv to smooth");
  plots->add_option("--window", plots_window, "Moving-average window (episodes)");
  plots->add_option("--out", plots_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_maps(gen_common, gen_out);
    if (tr->parsed())
      return cmd_train(train_common, train_kind, train_maps, train_out, train_quiet,
                       train_threads);
    if (ev->parsed())
      return cmd_eval(eval_common, eval_ckpt, eval_kind, eval_maps, eval_out, eval_episodes);
    if (cmp->parsed())
      return cmd_compare(cmp_common, cmp_models, cmp_maps, cmp_out, cmp_episodes, cmp_varied);
    if (plots->parsed())
      return cmd_export_plots(plots_map, plots_z, zopt->count() > 0, plots_metrics,
                              plots_window, plots_out);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.push_back("plumerl");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : full) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace plumerl::cli
