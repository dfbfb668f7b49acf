#include "qalign/eval/campaign.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "qalign/env/stage.hpp"
#include "qalign/errors.hpp"
#include "qalign/rl/trainer.hpp"

namespace qalign::eval {

TrialResult run_ha_trial(const env::EnvConfig& env_config, const heuristic::HeuristicConfig& config,
                         long long trial_id, std::uint64_t trial_seed, const env::Pose& start, double budget_s) {
  env::CouplingStage stage(env_config.coupling, derive_seed(trial_seed, 1), start);
  const auto trace = heuristic::run_alignment(stage, config, env_config.c_max());
  TrialResult r;
  r.trial_id = trial_id;
  r.policy = Policy::heuristic;
  r.seed = trial_seed;
  r.start = start;
  if (trace.outcome == heuristic::Outcome::converged && *trace.converged_at_s <= budget_s) {
    r.converged = true;
    r.time_s = trace.converged_at_s;
  }
  return r;
}

std::vector<TrialResult> run_indexed(int n, int jobs, const std::function<TrialResult(int)>& fn) {
  if (n < 0) throw DomainError("run_indexed: negative trial count");
  std::vector<TrialResult> out(n);
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < std::min(jobs, n); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<TrialResult> run_ha_trials(const env::EnvConfig& env_config, const heuristic::HeuristicConfig& config,
                                       int n_trials, std::uint64_t seed, double budget_s, int jobs) {
  return run_indexed(n_trials, jobs, [&](int i) {
    const auto ts = trial_seed(seed, i);
    return run_ha_trial(env_config, config, i, ts, trial_start_pose(env_config, ts), budget_s);
  });
}

std::vector<TrialResult> run_rl_trials(const rl::SacAgent<float>& agent, const env::EnvConfig& env_config,
                                       int n_trials, std::uint64_t seed, double budget_s, int jobs) {
  return run_indexed(n_trials, jobs, [&](int i) {
    const auto ts = trial_seed(seed, i);
    return rl::run_rl_trial(agent, env_config, i, ts, trial_start_pose(env_config, ts), budget_s);
  });
}

}  // namespace qalign::eval
