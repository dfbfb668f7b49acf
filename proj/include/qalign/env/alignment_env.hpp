#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "qalign/env/coupling.hpp"
#include "qalign/env/stage.hpp"

namespace qalign::env {

/// Reward shaping: r = clip(b - p, lo, hi), b = b0 * max(0, floor(dc / s_b)),
/// s_b = c_max / l_bonus.
struct RewardConfig {
  double step_penalty = 0.05;
  double bonus_unit = 0.6;
  int bonus_levels = 20;
  /// Expected maximum count rate; <= 0 selects the coupling model's peak rate.
  double c_max_cps = 0.0;
  double clip_lo = -1.0;
  double clip_hi = 1.0;

  void validate() const;
  bool operator==(const RewardConfig&) const = default;
};

struct MdpConfig {
  static constexpr double kThetaStepMax = std::numbers::pi;

  double t_step_s = 31.0;
  double r_step_max_um = 72.0;
  double z_step_max_um = 563.0;
  int obs_frames = 5;
  int episode_steps = 200;
  double success_fraction = 0.9;
  /// Starting misalignment: uniform over the cylinder r <= start_r_max,
  /// |z - z_optimal| <= start_dz_max.
  double start_r_max_um = 300.0;
  double start_dz_max_um = 1200.0;

  void validate() const;
  bool operator==(const MdpConfig&) const = default;
};

struct EnvConfig {
  CouplingModel coupling;
  RewardConfig reward;
  MdpConfig mdp;

  void validate() const;
  double c_max() const;
  double bonus_step() const { return c_max() / reward.bonus_levels; }
  double success_rate() const { return mdp.success_fraction * c_max(); }

  bool operator==(const EnvConfig&) const = default;
};

/// Normalized policy action; components are clamped to [-1, 1].
struct StepAction {
  double d_r = 0.0;
  double d_theta = 0.0;
  double d_z = 0.0;

  StepAction clamped() const;
};

/// Constants mapping a (r, theta, z, c) frame to network inputs:
/// r / r_scale, theta / pi - 1, z / z_scale, c / c_max.
struct ObservationScale {
  double r_scale_um = 720.0;
  double z_scale_um = 5630.0;
  double c_max_cps = 20050.0;
  int obs_frames = 5;

  static ObservationScale from(const EnvConfig& config);
  int observation_dim() const { return 4 * obs_frames; }
  bool operator==(const ObservationScale&) const = default;
};

/// Bonus b = b0 * max(0, floor(dc / s_b)).
double bonus(const RewardConfig& reward, double bonus_step, double delta_c);
/// clip(b - p, lo, hi).
double shaped_reward(const RewardConfig& reward, double bonus_step, double delta_c);

/// Draws a start pose uniformly from the configured misalignment cylinder.
Pose sample_start_pose(const EnvConfig& config, Rng& rng);

struct StepInfo {
  bool success = false;
  bool truncated = false;
  MeasurementRecord measurement;
  Pose pose;
  double delta_c = 0.0;
  double elapsed_s = 0.0;
  int step = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

/// MDP view of the coupling stage. The state is (r, theta, z, c); the
/// observation stacks the last obs_frames normalized frames, oldest first.
/// Reset performs one t_step measurement at the start pose.
class AlignmentEnv {
 public:
  AlignmentEnv(EnvConfig config, std::uint64_t seed);

  const EnvConfig& config() const { return config_; }
  ObservationScale scale() const { return scale_; }
  int observation_dim() const { return scale_.observation_dim(); }

  /// Samples a start pose from the misalignment cylinder.
  std::vector<double> reset();
  std::vector<double> reset_to(const Pose& start);

  /// Throws StateError before the first reset or after the episode ended.
  StepResult step(const StepAction& action);

  const Pose& pose() const { return stage_.pose(); }
  double last_rate_cps() const { return last_rate_; }
  double elapsed_s() const { return stage_.elapsed_s() - episode_start_s_; }
  int steps_taken() const { return steps_; }
  bool episode_active() const { return active_; }
  bool last_success() const { return success_; }

  CouplingStage& stage() { return stage_; }

 private:
  std::vector<double> begin_episode(const Pose& start);
  void push_frame();
  std::vector<double> observation() const;

  EnvConfig config_;
  ObservationScale scale_;
  Rng start_rng_;
  CouplingStage stage_;
  std::vector<std::array<double, 4>> frames_;
  double last_rate_ = 0.0;
  double episode_start_s_ = 0.0;
  int steps_ = 0;
  bool active_ = false;
  bool success_ = false;
};

struct TrajectoryRow {
  int step = 0;
  Pose pose;
  std::int64_t counts = 0;
  double rate_cps = 0.0;
  double reward = 0.0;
  bool done = false;
};

/// step,r_um,theta_rad,z_um,counts,rate_cps,reward,done
void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryRow> rows);

}  // namespace qalign::env
