#pragma once

#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qalign/env/coupling.hpp"
#include "qalign/env/stage.hpp"

namespace qalign::heuristic {

struct HeuristicConfig {
  double z_blind_jump_um = 1580.0;
  double initial_integration_s = 120.0;
  double z_confidence = 0.995;
  double xy_confidence = 0.999;
  double success_fraction = 0.9;
  double time_budget_s = 3600.0;
  double initial_z_step_um = 200.0;
  double initial_xy_step_um = 40.0;
  double step_shrink = 2.0 / 3.0;
  long long min_counts_worse = 200;
  long long min_counts_better = 500;
  long long xy_min_counts = 300;
  double xy_max_meas_time_s = 30.0;
  /// First integration of every probe; grown by integration_growth until the
  /// count target is met or the cap (max_integration_s, or
  /// xy_max_meas_time_s in the XY plane) is reached.
  double probe_integration_s = 10.0;
  double integration_growth = 1.5;
  double max_integration_s = 120.0;

  void validate() const;
  bool operator==(const HeuristicConfig&) const = default;
};

enum class Outcome { converged, timed_out, aborted_no_signal };

const char* to_string(Outcome outcome);

struct TraceEvent {
  double t_s = 0.0;
  env::Pose pose;
  env::MeasurementRecord record;
  std::optional<double> w;
  std::string decision;
  std::string phase;
};

struct SearchTrace {
  std::vector<TraceEvent> events;
  Outcome outcome = Outcome::timed_out;
  double elapsed_s = 0.0;
  /// Simulated time of the measurement that first reached the success rate.
  std::optional<double> converged_at_s;
  env::Pose final_pose;
};

/// Outcome of one axial or radial search phase.
enum class PhaseStatus { switch_axis, converged, timed_out };

/// Alignment procedure that mimics manual lab practice: blind jump to Z0,
/// signal verification, then alternating axial and four-point radial
/// searches gated by the W test, until the count rate reaches
/// success_fraction * c_max or the time budget is spent.
///
/// The aligner drives a CouplingStage it does not own; the stage clock is the
/// only notion of time.
class HeuristicAligner {
 public:
  HeuristicAligner(env::CouplingStage& stage, HeuristicConfig config, double c_max_cps);

  /// Blind jump and 120 s reference measurement. Returns false (and sets the
  /// aborted outcome) when the counts do not exceed background by 5 sigma.
  bool verify_signal();
  PhaseStatus axial_search();
  PhaseStatus radial_search();

  /// Full procedure on a fresh stage.
  SearchTrace run();

  const SearchTrace& trace() const { return trace_; }
  const env::Pose& accepted_pose() const { return accepted_pose_; }
  const env::MeasurementRecord& accepted_record() const { return accepted_; }
  double z_step_um() const { return z_step_; }
  double xy_step_um() const { return xy_step_; }
  int z_direction() const { return z_dir_; }
  double z_threshold() const { return z_threshold_; }
  double xy_threshold() const { return xy_threshold_; }

 private:
  enum class ProbeResult { better, worse, inconclusive };

  bool budget_exhausted() const;
  bool is_success(const env::MeasurementRecord& rec) const;
  std::optional<env::MeasurementRecord> measure_adaptive(long long target_counts, double cap_s);
  TraceEvent& log(const env::MeasurementRecord& rec, std::optional<double> w, std::string decision,
                  std::string phase);
  void accept(const env::Pose& pose, const env::MeasurementRecord& rec);
  void finish(Outcome outcome);
  int consecutive_failures() const;

  env::CouplingStage& stage_;
  HeuristicConfig config_;
  double c_max_;
  double z_threshold_;
  double xy_threshold_;

  env::Pose accepted_pose_;
  env::MeasurementRecord accepted_;
  double z_step_;
  double xy_step_;
  int z_dir_ = 1;
  std::deque<ProbeResult> history_;  // last four axial probe outcomes
  SearchTrace trace_;
};

/// Convenience wrapper: HeuristicAligner(stage, config, c_max).run().
SearchTrace run_alignment(env::CouplingStage& stage, const HeuristicConfig& config, double c_max_cps);

/// t_s,r_um,theta_rad,z_um,counts,int_time_s,W,decision,phase
void write_trace_csv(std::ostream& os, const SearchTrace& trace);

}  // namespace qalign::heuristic
