#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qalign/env/alignment_env.hpp"
#include "qalign/heuristic/aligner.hpp"
#include "qalign/rl/sac.hpp"
#include "qalign/spdc/phase_matching.hpp"

namespace qalign::config {

/// Temperature scan settings (keys live in the `crystal` block).
struct SweepConfig {
  double t_min_c = 10.0;
  double t_max_c = 80.0;
  int steps = 71;
  int grid_points = 2048;
  bool operator==(const SweepConfig&) const = default;
};

struct EvalConfig {
  int trials = 200;
  double budget_s = 3600.0;
  int n_thresholds = 361;
  bool operator==(const EvalConfig&) const = default;
};

/// Every tunable of every module, grouped in the blocks crystal, coupling,
/// reward, mdp, heuristic, sac and eval.
struct RunConfig {
  spdc::CrystalConfig crystal;
  SweepConfig sweep;
  env::CouplingModel coupling;
  env::RewardConfig reward;
  env::MdpConfig mdp;
  heuristic::HeuristicConfig heuristic;
  rl::SacConfig sac;
  EvalConfig eval;

  env::EnvConfig env() const { return env::EnvConfig{coupling, reward, mdp}; }
  /// Throws ConfigError naming the first invalid block.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

inline constexpr const char* kEnvPrefix = "QALIGN_";

nlohmann::json to_json(const RunConfig& config);

/// Applies the keys present in `j` on top of `base`. Unknown blocks or keys
/// and ill-typed values throw ConfigError.
RunConfig merge_json(const nlohmann::json& j, RunConfig base = {});

/// `block.key=value`; the value is read as JSON when it parses, otherwise as
/// a string.
void apply_override(RunConfig& config, const std::string& assignment);

/// Variables named QALIGN_<BLOCK>__<KEY> (case-insensitive block and key).
void apply_env_overrides(RunConfig& config, const std::map<std::string, std::string>& environment);
std::map<std::string, std::string> current_environment();

/// defaults < file < overrides < environment; validated.
RunConfig resolve(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides,
                  const std::map<std::string, std::string>& environment);

RunConfig load_file(const std::filesystem::path& path);
/// Pretty-printed resolved config.
void write_config(const std::filesystem::path& path, const RunConfig& config);

}  // namespace qalign::config
