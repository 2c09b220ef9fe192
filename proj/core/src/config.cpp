#include "plumerl/config.hpp"

#include "plumerl/map_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace plumerl {

void Hyperparameters::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("tau must lie in [0,1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0,1]");
  if (batch_size < 1 || seq_len < 1) throw std::invalid_argument("batch/sequence sizes must be positive");
  if (hidden_size < 1 || obs_embed < 1 || act_embed < 1)
    throw std::invalid_argument("network sizes must be positive");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
  if (!(eps_max >= eps_min && eps_min >= 0.0))
    throw std::invalid_argument("need eps_max >= eps_min >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (total_episodes < t_init)
    throw std::invalid_argument("total_episodes must be at least t_init");
  if (agents < 1) throw std::invalid_argument("need at least one agent");
  if (!(noise_k_min >= 0.0 && noise_k_min <= noise_k_max && noise_k_max <= 1.0))
    throw std::invalid_argument("noise range must satisfy 0 <= k_min <= k_max <= 1");
  if (buffer_capacity == 0) throw std::invalid_argument("buffer_capacity must be positive");
  if (checkpoint_interval < 1) throw std::invalid_argument("checkpoint_interval must be positive");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be positive");
  if (mapgen.train_maps < 1 || mapgen.test_maps < 1)
    throw std::invalid_argument("map counts must be positive");
  if (mapgen.u_steps < 1 || mapgen.q_steps < 1 || mapgen.h_steps < 1 || mapgen.classes.empty())
    throw std::invalid_argument("map parameter ranges must be non-empty");
  grid.validate();
}

Hyperparameters full_profile() { return Hyperparameters{}; }

Hyperparameters desk_profile() {
  Hyperparameters hp;
  hp.hidden_size = 64;
  hp.obs_embed = 32;
  hp.act_embed = 32;
  hp.batch_size = 32;
  hp.seq_len = 16;
  hp.t_init = 300;
  hp.total_episodes = 1500;
  hp.max_epochs = 300;
  hp.buffer_capacity = 60000;
  hp.checkpoint_interval = 250;
  hp.eval_episodes = 200;
  return hp;
}

Hyperparameters profile_by_name(const std::string& name) {
  if (name == "full") return full_profile();
  if (name == "desk") return desk_profile();
  throw std::invalid_argument("unknown profile: " + name + " (expected full|desk)");
}

namespace {

struct Binding {
  std::function<void(Hyperparameters&, const std::string&)> set;
  std::function<std::string(const Hyperparameters&)> get;
};

double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size()) throw std::runtime_error("config: trailing junk for " + key);
  return d;
}

long parse_long(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  long d;
  try {
    d = std::stol(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad integer for " + key + ": '" + v + "'");
  }
  if (pos != v.size()) throw std::runtime_error("config: trailing junk for " + key);
  return d;
}

const std::map<std::string, Binding>& bindings() {
  auto dbl = [](double Hyperparameters::* f) {
    return Binding{[f](Hyperparameters& hp, const std::string& v) { hp.*f = parse_double(v, ""); },
                   [f](const Hyperparameters& hp) { return format_double(hp.*f); }};
  };
  auto lng = [](long Hyperparameters::* f) {
    return Binding{[f](Hyperparameters& hp, const std::string& v) { hp.*f = parse_long(v, ""); },
                   [f](const Hyperparameters& hp) { return std::to_string(hp.*f); }};
  };
  auto integer = [](int Hyperparameters::* f) {
    return Binding{[f](Hyperparameters& hp, const std::string& v) {
                     hp.*f = static_cast<int>(parse_long(v, ""));
                   },
                   [f](const Hyperparameters& hp) { return std::to_string(hp.*f); }};
  };
  static const std::map<std::string, Binding> table = {
      {"alpha", dbl(&Hyperparameters::alpha)},
      {"tau", dbl(&Hyperparameters::tau)},
      {"gamma", dbl(&Hyperparameters::gamma)},
      {"batch_size", integer(&Hyperparameters::batch_size)},
      {"seq_len", integer(&Hyperparameters::seq_len)},
      {"hidden_size", integer(&Hyperparameters::hidden_size)},
      {"obs_embed", integer(&Hyperparameters::obs_embed)},
      {"act_embed", integer(&Hyperparameters::act_embed)},
      {"max_epochs", integer(&Hyperparameters::max_epochs)},
      {"eps_max", dbl(&Hyperparameters::eps_max)},
      {"eps_min", dbl(&Hyperparameters::eps_min)},
      {"lambda", dbl(&Hyperparameters::lambda)},
      {"t_init", lng(&Hyperparameters::t_init)},
      {"total_episodes", lng(&Hyperparameters::total_episodes)},
      {"agents", integer(&Hyperparameters::agents)},
      {"noise_k_min", dbl(&Hyperparameters::noise_k_min)},
      {"noise_k_max", dbl(&Hyperparameters::noise_k_max)},
      {"grid_nx",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.nx = static_cast<int>(parse_long(v, "grid_nx")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.grid.nx); }}},
      {"grid_ny",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.ny = static_cast<int>(parse_long(v, "grid_ny")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.grid.ny); }}},
      {"grid_nz",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.nz = static_cast<int>(parse_long(v, "grid_nz")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.grid.nz); }}},
      {"cell_size",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.cell_size = parse_double(v, "cell_size"); },
        [](const Hyperparameters& hp) { return format_double(hp.grid.cell_size); }}},
      {"origin_x",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.origin_x = parse_double(v, "origin_x"); },
        [](const Hyperparameters& hp) { return format_double(hp.grid.origin_x); }}},
      {"origin_y",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.origin_y = parse_double(v, "origin_y"); },
        [](const Hyperparameters& hp) { return format_double(hp.grid.origin_y); }}},
      {"origin_z",
       {[](Hyperparameters& hp, const std::string& v) { hp.grid.origin_z = parse_double(v, "origin_z"); },
        [](const Hyperparameters& hp) { return format_double(hp.grid.origin_z); }}},
      {"buffer_capacity",
       {[](Hyperparameters& hp, const std::string& v) {
          hp.buffer_capacity = static_cast<std::size_t>(parse_long(v, "buffer_capacity"));
        },
        [](const Hyperparameters& hp) { return std::to_string(hp.buffer_capacity); }}},
      {"clip_norm", dbl(&Hyperparameters::clip_norm)},
      {"checkpoint_interval", lng(&Hyperparameters::checkpoint_interval)},
      {"eval_episodes", integer(&Hyperparameters::eval_episodes)},
      {"map_u_min",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.u_min = parse_double(v, "map_u_min"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.u_min); }}},
      {"map_u_max",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.u_max = parse_double(v, "map_u_max"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.u_max); }}},
      {"map_u_steps",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.u_steps = static_cast<int>(parse_long(v, "map_u_steps")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.mapgen.u_steps); }}},
      {"map_q_min",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.q_min = parse_double(v, "map_q_min"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.q_min); }}},
      {"map_q_max",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.q_max = parse_double(v, "map_q_max"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.q_max); }}},
      {"map_q_steps",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.q_steps = static_cast<int>(parse_long(v, "map_q_steps")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.mapgen.q_steps); }}},
      {"map_h_min",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.h_min = parse_double(v, "map_h_min"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.h_min); }}},
      {"map_h_max",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.h_max = parse_double(v, "map_h_max"); },
        [](const Hyperparameters& hp) { return format_double(hp.mapgen.h_max); }}},
      {"map_h_steps",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.h_steps = static_cast<int>(parse_long(v, "map_h_steps")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.mapgen.h_steps); }}},
      {"map_classes",
       {[](Hyperparameters& hp, const std::string& v) {
          for (char c : v) stability_from_char(c); // validates
          hp.mapgen.classes = v;
        },
        [](const Hyperparameters& hp) { return hp.mapgen.classes; }}},
      {"train_maps",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.train_maps = static_cast<int>(parse_long(v, "train_maps")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.mapgen.train_maps); }}},
      {"test_maps",
       {[](Hyperparameters& hp, const std::string& v) { hp.mapgen.test_maps = static_cast<int>(parse_long(v, "test_maps")); },
        [](const Hyperparameters& hp) { return std::to_string(hp.mapgen.test_maps); }}},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

} // namespace

void apply_config_text(Hyperparameters& hp, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no += 1;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = bindings().find(key);
    if (it == bindings().end())
      throw std::runtime_error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    it->second.set(hp, value);
  }
}

void apply_config_file(Hyperparameters& hp, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  apply_config_text(hp, in);
}

std::string config_to_text(const Hyperparameters& hp) {
  std::ostringstream out;
  for (const auto& [key, binding] : bindings()) out << key << " = " << binding.get(hp) << '\n';
  return out.str();
}

} // namespace plumerl
