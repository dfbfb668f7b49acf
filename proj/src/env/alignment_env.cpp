#include "qalign/env/alignment_env.hpp"

#include <algorithm>
#include <cmath>

#include "qalign/errors.hpp"
#include "qalign/io/csv.hpp"
#include "qalign/seeding.hpp"

namespace qalign::env {

void RewardConfig::validate() const {
  if (!(step_penalty > 0.0)) throw DomainError("reward: step_penalty must be > 0");
  if (!(bonus_unit >= 0.0)) throw DomainError("reward: bonus_unit must be >= 0");
  if (bonus_levels < 1) throw DomainError("reward: bonus_levels must be >= 1");
  if (!(clip_lo < clip_hi)) throw DomainError("reward: clip_lo must be < clip_hi");
}

void MdpConfig::validate() const {
  if (!(t_step_s > 0.0)) throw DomainError("mdp: t_step_s must be > 0");
  if (!(r_step_max_um > 0.0)) throw DomainError("mdp: r_step_max_um must be > 0");
  if (!(z_step_max_um > 0.0)) throw DomainError("mdp: z_step_max_um must be > 0");
  if (obs_frames < 1) throw DomainError("mdp: obs_frames must be >= 1");
  if (episode_steps < 1) throw DomainError("mdp: episode_steps must be >= 1");
  if (!(success_fraction > 0.0 && success_fraction <= 1.0)) {
    throw DomainError("mdp: success_fraction must be in (0, 1]");
  }
  if (!(start_r_max_um >= 0.0) || !(start_dz_max_um >= 0.0)) {
    throw DomainError("mdp: start misalignment bounds must be >= 0");
  }
}

void EnvConfig::validate() const {
  coupling.validate();
  reward.validate();
  mdp.validate();
}

double EnvConfig::c_max() const {
  return reward.c_max_cps > 0.0 ? reward.c_max_cps : coupling.peak_rate_cps();
}

StepAction StepAction::clamped() const {
  auto c = [](double v) { return std::isnan(v) ? 0.0 : std::clamp(v, -1.0, 1.0); };
  return StepAction{c(d_r), c(d_theta), c(d_z)};
}

ObservationScale ObservationScale::from(const EnvConfig& config) {
  return ObservationScale{10.0 * config.mdp.r_step_max_um, 10.0 * config.mdp.z_step_max_um,
                          config.c_max(), config.mdp.obs_frames};
}

double bonus(const RewardConfig& reward, double bonus_step, double delta_c) {
  return reward.bonus_unit * std::max(0.0, std::floor(delta_c / bonus_step));
}

double shaped_reward(const RewardConfig& reward, double bonus_step, double delta_c) {
  return std::clamp(bonus(reward, bonus_step, delta_c) - reward.step_penalty, reward.clip_lo,
                    reward.clip_hi);
}

Pose sample_start_pose(const EnvConfig& config, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = config.mdp.start_r_max_um * std::sqrt(unit(rng));
  const double theta = 2.0 * std::numbers::pi * unit(rng);
  const double dz = config.mdp.start_dz_max_um * (2.0 * unit(rng) - 1.0);
  return Pose{r, theta, config.coupling.z_optimal_um + dz}.normalized();
}

AlignmentEnv::AlignmentEnv(EnvConfig config, std::uint64_t seed)
    : config_(config),
      scale_(ObservationScale::from(config)),
      start_rng_(derive_seed(seed, 1)),
      stage_(config.coupling, derive_seed(seed, 2)) {
  config_.validate();
}

std::vector<double> AlignmentEnv::reset() { return begin_episode(sample_start_pose(config_, start_rng_)); }

std::vector<double> AlignmentEnv::reset_to(const Pose& start) { return begin_episode(start); }

std::vector<double> AlignmentEnv::begin_episode(const Pose& start) {
  stage_.move_to(start);
  episode_start_s_ = stage_.elapsed_s();
  last_rate_ = stage_.measure(config_.mdp.t_step_s).rate_cps;
  steps_ = 0;
  success_ = last_rate_ >= config_.success_rate();
  active_ = !success_;
  frames_.clear();
  push_frame();
  while (static_cast<int>(frames_.size()) < config_.mdp.obs_frames) frames_.push_back(frames_.front());
  return observation();
}

void AlignmentEnv::push_frame() {
  const Pose& p = stage_.pose();
  frames_.push_back({p.r_um / scale_.r_scale_um, p.theta_rad / std::numbers::pi - 1.0,
                     p.z_um / scale_.z_scale_um, last_rate_ / scale_.c_max_cps});
  if (static_cast<int>(frames_.size()) > config_.mdp.obs_frames) frames_.erase(frames_.begin());
}

std::vector<double> AlignmentEnv::observation() const {
  std::vector<double> obs;
  obs.reserve(frames_.size() * 4);
  for (const auto& f : frames_) obs.insert(obs.end(), f.begin(), f.end());
  return obs;
}

StepResult AlignmentEnv::step(const StepAction& action) {
  if (!active_) throw StateError("AlignmentEnv::step called without an active episode; call reset()");
  const StepAction a = action.clamped();
  const Pose& p = stage_.pose();
  const Pose next{std::max(p.r_um + a.d_r * config_.mdp.r_step_max_um, 0.0),
                  p.theta_rad + a.d_theta * MdpConfig::kThetaStepMax,
                  p.z_um + a.d_z * config_.mdp.z_step_max_um};
  stage_.move_to(next);

  StepResult out;
  out.info.measurement = stage_.measure(config_.mdp.t_step_s);
  const double rate = out.info.measurement.rate_cps;
  out.info.delta_c = rate - last_rate_;
  out.reward = shaped_reward(config_.reward, config_.bonus_step(), out.info.delta_c);
  last_rate_ = rate;
  ++steps_;
  push_frame();

  success_ = rate >= config_.success_rate();
  out.info.success = success_;
  out.info.truncated = !success_ && steps_ >= config_.mdp.episode_steps;
  out.done = out.info.success || out.info.truncated;
  active_ = !out.done;
  out.info.pose = stage_.pose();
  out.info.elapsed_s = elapsed_s();
  out.info.step = steps_;
  out.observation = observation();
  return out;
}

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows) {
  os << "step,r_um,theta_rad,z_um,counts,rate_cps,reward,done\n";
  for (const auto& r : rows) {
    os << io::CsvRow{}
              .add(r.step)
              .add(r.pose.r_um)
              .add(r.pose.theta_rad)
              .add(r.pose.z_um)
              .add(static_cast<long long>(r.counts))
              .add(r.rate_cps)
              .add(r.reward)
              .add(r.done ? 1 : 0);
  }
}

}  // namespace qalign::env
