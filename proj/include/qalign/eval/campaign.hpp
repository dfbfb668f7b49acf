#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "qalign/env/alignment_env.hpp"
#include "qalign/eval/trial.hpp"
#include "qalign/heuristic/aligner.hpp"
#include "qalign/rl/sac.hpp"

namespace qalign::eval {

/// One heuristic attempt from `start` on a fresh stage seeded from the
/// trial seed. Converged iff the search reached the success rate within
/// `budget_s`.
TrialResult run_ha_trial(const env::EnvConfig& env_config, const heuristic::HeuristicConfig& config,
                         long long trial_id, std::uint64_t trial_seed, const env::Pose& start, double budget_s);

/// Runs fn(0..n-1) on `jobs` worker threads (jobs <= 1: inline) and returns
/// the results in index order.
std::vector<TrialResult> run_indexed(int n, int jobs, const std::function<TrialResult(int)>& fn);

std::vector<TrialResult> run_ha_trials(const env::EnvConfig& env_config, const heuristic::HeuristicConfig& config,
                                       int n_trials, std::uint64_t seed, double budget_s, int jobs = 1);

std::vector<TrialResult> run_rl_trials(const rl::SacAgent<float>& agent, const env::EnvConfig& env_config,
                                       int n_trials, std::uint64_t seed, double budget_s, int jobs = 1);

}  // namespace qalign::eval
