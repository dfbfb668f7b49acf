#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "qalign/env/alignment_env.hpp"
#include "qalign/seeding.hpp"

namespace qalign::eval {

enum class Policy { heuristic, rl };

inline const char* to_string(Policy p) { return p == Policy::heuristic ? "heuristic" : "rl"; }
Policy parse_policy(std::string_view s);

/// Outcome of one alignment attempt from a sampled start pose.
struct TrialResult {
  long long trial_id = 0;
  Policy policy = Policy::heuristic;
  std::uint64_t seed = 0;
  env::Pose start;
  bool converged = false;
  /// Simulated seconds to reach the success rate; present iff converged.
  std::optional<double> time_s;

  bool operator==(const TrialResult&) const = default;
};

/// Per-trial seed shared by both policies of a paired campaign.
constexpr std::uint64_t trial_seed(std::uint64_t campaign_seed, long long trial_id) {
  return derive_seed(campaign_seed, static_cast<std::uint64_t>(trial_id));
}

/// Start pose of a trial; depends only on the trial seed and the MDP
/// misalignment cylinder.
inline env::Pose trial_start_pose(const env::EnvConfig& config, std::uint64_t seed) {
  env::Rng rng(derive_seed(seed, 0));
  return env::sample_start_pose(config, rng);
}

}  // namespace qalign::eval
