#pragma once

#include <cstdint>

#include "qalign/env/coupling.hpp"

namespace qalign::env {

/// The physical coupling stage seen by a controller: a movable input fiber,
/// a photon counter and a simulated clock. Moves are instantaneous; only
/// detector integration advances the clock.
///
/// One instance is single-threaded; independent instances share nothing.
class CouplingStage {
 public:
  CouplingStage(CouplingModel model, std::uint64_t seed, Pose start = {});

  const CouplingModel& model() const { return model_; }
  const Pose& pose() const { return pose_; }
  double elapsed_s() const { return elapsed_s_; }

  /// Moves the fiber; the stored pose is normalized (r >= 0, theta wrapped).
  void move_to(const Pose& pose);

  /// Integrates for `integration_time_s` at the current pose.
  MeasurementRecord measure(double integration_time_s);

  /// Rate the detector would see without shot noise.
  double true_rate_here() const { return true_rate(model_, pose_); }

  /// Replaces Poisson draws by the rounded mean (for deterministic tests).
  void set_noise_free(bool on) { noise_free_ = on; }
  bool noise_free() const { return noise_free_; }

  /// Advances the clock without measuring (e.g. fixed actuator overhead).
  void advance_clock(double seconds) { elapsed_s_ += seconds; }

 private:
  CouplingModel model_;
  Rng rng_;
  Pose pose_;
  double elapsed_s_ = 0.0;
  bool noise_free_ = false;
};

}  // namespace qalign::env
