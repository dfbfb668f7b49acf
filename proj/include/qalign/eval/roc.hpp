#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "qalign/eval/trial.hpp"

namespace qalign::eval {

inline constexpr double kRocHorizonS = 3600.0;

/// Cumulative convergence fraction on a uniform threshold grid over
/// [0, horizon], and the normalized area under the underlying step function.
struct RocCurve {
  std::vector<double> thresholds_s;
  std::vector<double> accuracy;
  double auc = 0.0;
};

/// A(t) = #{converged trials with time < t} / N. Throws DomainError for an
/// empty result set.
double accuracy_at(std::span<const TrialResult> results, double threshold_s);

/// (1/T) * integral_0^T A(t) dt, evaluated exactly as
/// sum_j max(0, T - t_j) / (N T).
double exact_auc(std::span<const TrialResult> results, double horizon_s = kRocHorizonS);

/// n_thresholds >= 2 evenly spaced thresholds on [0, horizon].
RocCurve roc_curve(std::span<const TrialResult> results, int n_thresholds, double horizon_s = kRocHorizonS);

struct ComparisonReport {
  RocCurve roc_ha;
  RocCurve roc_rl;
  double auc_ha = 0.0;
  double auc_rl = 0.0;
  double delta = 0.0;  // auc_rl - auc_ha
  /// Failures count as +infinity, so a median can be infinite.
  double median_ha_s = 0.0;
  double median_rl_s = 0.0;
  /// Fraction of paired trials where RL converged strictly earlier; ties
  /// (including both failing) count one half.
  double win_rate = 0.0;
};

/// Throws PairingError unless both sets hold the same (trial_id, seed,
/// start pose) triples; DomainError if either is empty.
ComparisonReport compare_policies(std::span<const TrialResult> ha, std::span<const TrialResult> rl,
                                  int n_thresholds = 361, double horizon_s = kRocHorizonS);

/// Median convergence time with failures as +infinity.
double median_time(std::span<const TrialResult> results);

/// trial_id,policy,seed,r0_um,theta0_rad,z0_um,converged,time_s
void write_trials_csv(std::ostream& os, std::span<const TrialResult> results);
std::vector<TrialResult> read_trials_csv(std::istream& is);
/// threshold_s,accuracy
void write_roc_csv(std::ostream& os, const RocCurve& curve);
/// Two lines: auc_ha,auc_rl,delta,median_ha_s,median_rl_s,win_rate and the
/// values.
void write_report(std::ostream& os, const ComparisonReport& report);

}  // namespace qalign::eval
