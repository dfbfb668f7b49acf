#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qalign/env/alignment_env.hpp"
#include "qalign/eval/trial.hpp"
#include "qalign/rl/checkpoint.hpp"
#include "qalign/rl/sac.hpp"

namespace qalign::rl {

inline constexpr double kDefaultEvalBudgetS = 3600.0;

/// One line of the training log. Reward and length are means over the
/// episodes that finished inside the logging window (NaN if none); losses
/// are means over the window's gradient updates (NaN before the first).
struct TrainLogRow {
  long long env_step = 0;
  double mean_reward = 0.0;
  double mean_ep_len = 0.0;
  double alpha = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

struct TrainOptions {
  /// When set, periodic, final and best checkpoints plus the log are written
  /// here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const TrainLogRow&)> on_log;
};

struct TrainResult {
  AgentCheckpoint final;
  /// Highest validation score seen (only when validation is enabled).
  std::optional<AgentCheckpoint> best;
  double best_score = -1.0;
  std::vector<TrainLogRow> log;
  long long episodes = 0;
};

/// Interleaved interaction and SAC updates. Uniform random actions during
/// warm-up, then stochastic policy actions; one batch per update after
/// warm-up. Throws NumericError (after writing diagnostic.ckpt when an
/// output directory is set) on a non-finite loss.
TrainResult train(const env::EnvConfig& env_config, const SacConfig& config, std::uint64_t seed,
                  const TrainOptions& options = {});

/// env_step,mean_reward,mean_ep_len,alpha,critic_loss,actor_loss
void write_train_log_csv(std::ostream& os, std::span<const TrainLogRow> rows);

/// Deterministic policy from `start` until the success rate or the budget.
eval::TrialResult run_rl_trial(const SacAgent<float>& agent, const env::EnvConfig& env_config,
                               long long trial_id, std::uint64_t trial_seed, const env::Pose& start,
                               double budget_s = kDefaultEvalBudgetS);

/// n_trials paired-seed trials (trial seeds from eval::trial_seed). Throws
/// VersionError when the checkpoint's normalization differs from the
/// environment's.
std::vector<eval::TrialResult> evaluate_policy(const AgentCheckpoint& ckpt, const env::EnvConfig& env_config,
                                               int n_trials, std::uint64_t seed,
                                               double budget_s = kDefaultEvalBudgetS);

/// Mean over trials of (budget - t)/budget for converged trials, 0 otherwise.
double validation_score(std::span<const eval::TrialResult> results, double budget_s = kDefaultEvalBudgetS);

}  // namespace qalign::rl
