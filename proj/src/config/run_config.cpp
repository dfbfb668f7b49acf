#include "qalign/config/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "qalign/errors.hpp"
#include "qalign/io/csv.hpp"

extern char** environ;

namespace qalign::config {

using nlohmann::json;

namespace {

// Calls v(block, key, field) for every configurable field.
template <class Config, class V>
void visit(Config& c, V&& v) {
  v("crystal", "poling_period_um", c.crystal.poling_period_um);
  v("crystal", "crystal_length_mm", c.crystal.crystal_length_mm);
  v("crystal", "pump_wavelength_nm", c.crystal.pump_wavelength_nm);
  v("crystal", "temperature_c", c.crystal.temperature_c);
  v("crystal", "pump_power_rel", c.crystal.pump_power_rel);
  v("crystal", "sweep_t_min_c", c.sweep.t_min_c);
  v("crystal", "sweep_t_max_c", c.sweep.t_max_c);
  v("crystal", "sweep_steps", c.sweep.steps);
  v("crystal", "grid_points", c.sweep.grid_points);

  v("coupling", "z_optimal_um", c.coupling.z_optimal_um);
  v("coupling", "lateral_waist_um", c.coupling.lateral_waist_um);
  v("coupling", "axial_rayleigh_um", c.coupling.axial_rayleigh_um);
  v("coupling", "max_rate_cps", c.coupling.max_rate_cps);
  v("coupling", "background_rate_cps", c.coupling.background_rate_cps);

  v("reward", "step_penalty", c.reward.step_penalty);
  v("reward", "bonus_unit", c.reward.bonus_unit);
  v("reward", "bonus_levels", c.reward.bonus_levels);
  v("reward", "c_max_cps", c.reward.c_max_cps);
  v("reward", "clip_lo", c.reward.clip_lo);
  v("reward", "clip_hi", c.reward.clip_hi);

  v("mdp", "t_step_s", c.mdp.t_step_s);
  v("mdp", "r_step_max_um", c.mdp.r_step_max_um);
  v("mdp", "z_step_max_um", c.mdp.z_step_max_um);
  v("mdp", "obs_frames", c.mdp.obs_frames);
  v("mdp", "episode_steps", c.mdp.episode_steps);
  v("mdp", "success_fraction", c.mdp.success_fraction);
  v("mdp", "start_r_max_um", c.mdp.start_r_max_um);
  v("mdp", "start_dz_max_um", c.mdp.start_dz_max_um);

  v("heuristic", "z_blind_jump_um", c.heuristic.z_blind_jump_um);
  v("heuristic", "initial_integration_s", c.heuristic.initial_integration_s);
  v("heuristic", "z_confidence", c.heuristic.z_confidence);
  v("heuristic", "xy_confidence", c.heuristic.xy_confidence);
  v("heuristic", "success_fraction", c.heuristic.success_fraction);
  v("heuristic", "time_budget_s", c.heuristic.time_budget_s);
  v("heuristic", "initial_z_step_um", c.heuristic.initial_z_step_um);
  v("heuristic", "initial_xy_step_um", c.heuristic.initial_xy_step_um);
  v("heuristic", "step_shrink", c.heuristic.step_shrink);
  v("heuristic", "min_counts_worse", c.heuristic.min_counts_worse);
  v("heuristic", "min_counts_better", c.heuristic.min_counts_better);
  v("heuristic", "xy_min_counts", c.heuristic.xy_min_counts);
  v("heuristic", "xy_max_meas_time_s", c.heuristic.xy_max_meas_time_s);
  v("heuristic", "probe_integration_s", c.heuristic.probe_integration_s);
  v("heuristic", "integration_growth", c.heuristic.integration_growth);
  v("heuristic", "max_integration_s", c.heuristic.max_integration_s);

  v("sac", "hidden", c.sac.hidden);
  v("sac", "batch_size", c.sac.batch_size);
  v("sac", "learning_rate", c.sac.learning_rate);
  v("sac", "gamma", c.sac.gamma);
  v("sac", "tau", c.sac.tau);
  v("sac", "replay_capacity", c.sac.replay_capacity);
  v("sac", "warmup_steps", c.sac.warmup_steps);
  v("sac", "entropy_target", c.sac.entropy_target);
  v("sac", "initial_alpha", c.sac.initial_alpha);
  v("sac", "log_std_min", c.sac.log_std_min);
  v("sac", "log_std_max", c.sac.log_std_max);
  v("sac", "total_steps", c.sac.total_steps);
  v("sac", "updates_per_step", c.sac.updates_per_step);
  v("sac", "log_interval", c.sac.log_interval);
  v("sac", "validation_interval", c.sac.validation_interval);
  v("sac", "validation_trials", c.sac.validation_trials);
  v("sac", "checkpoint_interval", c.sac.checkpoint_interval);

  v("eval", "trials", c.eval.trials);
  v("eval", "budget_s", c.eval.budget_s);
  v("eval", "n_thresholds", c.eval.n_thresholds);
}

std::string where(const std::string& block, const std::string& key) { return block + "." + key; }

void read_value(const json& j, double& out, const std::string& name) {
  if (!j.is_number()) throw ConfigError(name + ": expected a number");
  out = j.get<double>();
}

template <class Int>
  requires std::is_integral_v<Int>
void read_value(const json& j, Int& out, const std::string& name) {
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (d != static_cast<double>(static_cast<Int>(d))) throw ConfigError(name + ": expected an integer");
    out = static_cast<Int>(d);
    return;
  }
  if (!j.is_number_integer()) throw ConfigError(name + ": expected an integer");
  out = j.get<Int>();
}

void read_value(const json& j, std::vector<int>& out, const std::string& name) {
  if (!j.is_array()) throw ConfigError(name + ": expected an array of integers");
  std::vector<int> v;
  for (const auto& e : j) {
    int x = 0;
    read_value(e, x, name);
    v.push_back(x);
  }
  out = std::move(v);
}

std::set<std::pair<std::string, std::string>> known_keys() {
  std::set<std::pair<std::string, std::string>> keys;
  RunConfig c;
  visit(c, [&](const char* b, const char* k, auto&) { keys.emplace(b, k); });
  return keys;
}

bool known_block(const std::string& block) {
  for (const auto& [b, k] : known_keys()) {
    if (b == block) return true;
  }
  return false;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
  return s;
}

json parse_scalar(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

void set_key(RunConfig& config, const std::string& block, const std::string& key, const json& value) {
  if (!known_keys().count({block, key})) throw ConfigError("unknown config key '" + where(block, key) + "'");
  json patch;
  patch[block][key] = value;
  config = merge_json(patch, config);
}

template <class F>
void check(const char* block, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid ") + block + " config: " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  check("crystal", [&] { crystal.validate(); });
  check("crystal", [&] {
    if (sweep.steps < 1) throw DomainError("sweep_steps must be >= 1");
    if (!(sweep.t_max_c >= sweep.t_min_c)) throw DomainError("sweep_t_max_c must be >= sweep_t_min_c");
    if (sweep.grid_points < int(spdc::kMinGridPoints)) throw DomainError("grid_points below minimum");
  });
  check("coupling", [&] { coupling.validate(); });
  check("reward", [&] { reward.validate(); });
  check("mdp", [&] { mdp.validate(); });
  check("heuristic", [&] { heuristic.validate(); });
  check("sac", [&] { sac.validate(); });
  check("eval", [&] {
    if (eval.trials < 1) throw DomainError("trials must be >= 1");
    if (!(eval.budget_s > 0.0)) throw DomainError("budget_s must be > 0");
    if (eval.n_thresholds < 2) throw DomainError("n_thresholds must be >= 2");
  });
}

json to_json(const RunConfig& config) {
  json j = json::object();
  visit(config, [&](const char* b, const char* k, const auto& v) { j[b][k] = v; });
  return j;
}

RunConfig merge_json(const json& j, RunConfig base) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const auto keys = known_keys();
  for (const auto& [block, body] : j.items()) {
    if (!known_block(block)) throw ConfigError("unknown config block '" + block + "'");
    if (!body.is_object()) throw ConfigError("config block '" + block + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      if (!keys.count({block, key})) throw ConfigError("unknown config key '" + where(block, key) + "'");
    }
  }
  visit(base, [&](const char* b, const char* k, auto& field) {
    if (j.contains(b) && j.at(b).contains(k)) read_value(j.at(b).at(k), field, where(b, k));
  });
  return base;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override '" + assignment + "' is not of the form block.key=value");
  }
  set_key(config, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1),
          parse_scalar(assignment.substr(eq + 1)));
}

void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment) {
  const std::string prefix = kEnvPrefix;
  for (const auto& [name, value] : environment) {
    if (name.rfind(prefix, 0) != 0) continue;
    const auto rest = name.substr(prefix.size());
    const auto sep = rest.find("__");
    if (sep == std::string::npos) continue;
    set_key(config, lower(rest.substr(0, sep)), lower(rest.substr(sep + 2)), parse_scalar(value));
  }
}

std::map<std::string, std::string> current_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv = *e;
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

RunConfig load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return merge_json(j);
}

RunConfig resolve(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                  const std::map<std::string, std::string>& environment) {
  RunConfig c = file ? load_file(*file) : RunConfig{};
  for (const auto& o : overrides) apply_override(c, o);
  apply_env_overrides(c, environment);
  c.validate();
  return c;
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  io::write_atomically(path, to_json(config).dump(2) + "\n");
}

}  // namespace qalign::config
