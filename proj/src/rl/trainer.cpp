#include "qalign/rl/trainer.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "qalign/errors.hpp"
#include "qalign/io/csv.hpp"
#include "qalign/rl/replay.hpp"
#include "qalign/seeding.hpp"

namespace qalign::rl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::array<double, kActionDim> greedy_action(const SacAgent<float>& agent, const std::vector<double>& obs) {
  Eigen::MatrixXf x(agent.obs_dim(), 1);
  for (int i = 0; i < agent.obs_dim(); ++i) {
    if (!std::isfinite(obs[i])) throw DomainError("policy: non-finite observation");
    x(i, 0) = float(obs[i]);
  }
  const Eigen::MatrixXf a = agent.deterministic_action(x);
  return {double(a(0, 0)), double(a(1, 0)), double(a(2, 0))};
}

// Resets until the start pose is not already a success.
std::vector<double> reset_active(env::AlignmentEnv& env) {
  for (;;) {
    auto obs = env.reset();
    if (env.episode_active()) return obs;
  }
}

struct Window {
  double reward_sum = 0.0;
  double length_sum = 0.0;
  long long episodes = 0;
  double critic_sum = 0.0;
  double actor_sum = 0.0;
  long long updates = 0;

  TrainLogRow row(long long step, double alpha) const {
    TrainLogRow r;
    r.env_step = step;
    r.mean_reward = episodes ? reward_sum / double(episodes) : kNaN;
    r.mean_ep_len = episodes ? length_sum / double(episodes) : kNaN;
    r.alpha = alpha;
    r.critic_loss = updates ? critic_sum / double(updates) : kNaN;
    r.actor_loss = updates ? actor_sum / double(updates) : kNaN;
    return r;
  }
};

}  // namespace

eval::TrialResult run_rl_trial(const SacAgent<float>& agent, const env::EnvConfig& env_config,
                               long long trial_id, std::uint64_t trial_seed, const env::Pose& start,
                               double budget_s) {
  env::EnvConfig cfg = env_config;
  cfg.mdp.episode_steps = int(std::ceil(budget_s / cfg.mdp.t_step_s)) + 1;
  env::AlignmentEnv env(cfg, derive_seed(trial_seed, 2));

  eval::TrialResult result;
  result.trial_id = trial_id;
  result.policy = eval::Policy::rl;
  result.seed = trial_seed;
  result.start = start;

  auto obs = env.reset_to(start);
  while (env.episode_active() && env.elapsed_s() < budget_s) {
    const auto a = greedy_action(agent, obs);
    auto res = env.step(env::StepAction{a[0], a[1], a[2]});
    obs = std::move(res.observation);
  }
  if (env.last_success() && env.elapsed_s() <= budget_s) {
    result.converged = true;
    result.time_s = env.elapsed_s();
  }
  return result;
}

std::vector<eval::TrialResult> evaluate_policy(const AgentCheckpoint& ckpt, const env::EnvConfig& env_config,
                                               int n_trials, std::uint64_t seed, double budget_s) {
  if (n_trials <= 0) throw DomainError("evaluate_policy: n_trials must be > 0");
  if (!(ckpt.scale == env::ObservationScale::from(env_config))) {
    throw VersionError("evaluate_policy: checkpoint normalization constants differ from the environment");
  }
  std::vector<eval::TrialResult> out;
  out.reserve(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    const auto ts = eval::trial_seed(seed, i);
    out.push_back(run_rl_trial(ckpt.agent, env_config, i, ts, eval::trial_start_pose(env_config, ts), budget_s));
  }
  return out;
}

double validation_score(std::span<const eval::TrialResult> results, double budget_s) {
  if (results.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : results) {
    if (r.converged) s += std::max(0.0, budget_s - *r.time_s) / budget_s;
  }
  return s / double(results.size());
}

TrainResult train(const env::EnvConfig& env_config, const SacConfig& config, std::uint64_t seed,
                  const TrainOptions& options) {
  env_config.validate();
  config.validate();

  env::AlignmentEnv env(env_config, derive_seed(seed, 11));
  const int obs_dim = env.observation_dim();
  const auto scale = env.scale();
  SacAgent<float> agent(obs_dim, config, derive_seed(seed, 10));
  ReplayBuffer replay(obs_dim, config.replay_capacity);
  auto& rng = agent.rng();
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  std::vector<std::uint64_t> validation_seeds;
  for (int i = 0; i < config.validation_trials; ++i) validation_seeds.push_back(derive_seed(seed, 1000 + i));

  TrainResult result{AgentCheckpoint{agent, scale, 0}, std::nullopt, -1.0, {}, 0};
  auto snapshot = [&](long long step) { return AgentCheckpoint{agent, scale, step}; };
  auto save = [&](const char* name, long long step) {
    if (options.out_dir) save_checkpoint(*options.out_dir / name, snapshot(step));
  };

  Window window;
  auto obs = reset_active(env);
  double ep_return = 0.0;
  int ep_len = 0;

  for (long long step = 1; step <= config.total_steps; ++step) {
    std::array<double, kActionDim> a;
    if (step <= config.warmup_steps) {
      for (auto& v : a) v = uniform(rng);
    } else {
      a = agent.act(obs, true);
    }
    auto res = env.step(env::StepAction{a[0], a[1], a[2]});
    replay.add(obs, a, res.reward, res.observation, res.info.success);
    ep_return += res.reward;
    ++ep_len;
    if (res.done) {
      window.reward_sum += ep_return;
      window.length_sum += ep_len;
      ++window.episodes;
      ++result.episodes;
      ep_return = 0.0;
      ep_len = 0;
      obs = reset_active(env);
    } else {
      obs = std::move(res.observation);
    }

    if (step > config.warmup_steps && replay.size() >= config.batch_size) {
      for (int u = 0; u < config.updates_per_step; ++u) {
        const auto batch = replay.sample(config.batch_size, rng);
        const auto cl = agent.critic_update(batch);
        const auto al = agent.actor_and_alpha_update(batch);
        if (!std::isfinite(cl.q1) || !std::isfinite(cl.q2) || !std::isfinite(al.actor) ||
            !std::isfinite(agent.log_alpha())) {
          save("diagnostic.ckpt", step);
          throw NumericError("training diverged: non-finite loss at env step " + std::to_string(step));
        }
        window.critic_sum += 0.5 * (cl.q1 + cl.q2);
        window.actor_sum += al.actor;
        ++window.updates;
      }
    }

    if (step % config.log_interval == 0) {
      const auto row = window.row(step, agent.alpha());
      result.log.push_back(row);
      if (options.on_log) options.on_log(row);
      window = Window{};
    }

    if (config.validation_interval > 0 && step % config.validation_interval == 0) {
      std::vector<eval::TrialResult> trials;
      for (std::size_t i = 0; i < validation_seeds.size(); ++i) {
        const auto ts = validation_seeds[i];
        trials.push_back(run_rl_trial(agent, env_config, long(i), ts, eval::trial_start_pose(env_config, ts)));
      }
      const double score = validation_score(trials);
      if (score > result.best_score) {
        result.best_score = score;
        result.best = snapshot(step);
        save("best.ckpt", step);
      }
    }

    if (config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0) {
      save("latest.ckpt", step);
    }
  }

  result.final = snapshot(config.total_steps);
  save("final.ckpt", config.total_steps);
  if (options.out_dir) {
    auto os = io::open_output(*options.out_dir / "train_log.csv");
    write_train_log_csv(os, result.log);
  }
  return result;
}

void write_train_log_csv(std::ostream& os, std::span<const TrainLogRow> rows) {
  os << "env_step,mean_reward,mean_ep_len,alpha,critic_loss,actor_loss\n";
  for (const auto& r : rows) {
    io::CsvRow row;
    row.add(r.env_step).add(r.mean_reward).add(r.mean_ep_len).add(r.alpha).add(r.critic_loss).add(r.actor_loss);
    os << row;
  }
}

}  // namespace qalign::rl
