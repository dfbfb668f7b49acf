#include "qalign/heuristic/aligner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "qalign/errors.hpp"
#include "qalign/heuristic/w_test.hpp"
#include "qalign/io/csv.hpp"

namespace qalign::heuristic {

namespace {

constexpr int kMaxAcceptsPerPhase = 3;
constexpr std::size_t kHistoryLength = 4;

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(std::string("HeuristicConfig: ") + what);
}

}  // namespace

void HeuristicConfig::validate() const {
  require(std::isfinite(z_blind_jump_um), "z_blind_jump must be finite");
  require(initial_integration_s > 0.0, "initial_integration must be > 0");
  require(z_confidence > 0.5 && z_confidence < 1.0, "z_confidence must lie in (0.5, 1)");
  require(xy_confidence > 0.5 && xy_confidence < 1.0, "xy_confidence must lie in (0.5, 1)");
  require(success_fraction > 0.0 && success_fraction <= 1.0, "success_fraction must lie in (0, 1]");
  require(time_budget_s >= 0.0, "time_budget must be >= 0");
  require(initial_z_step_um > 0.0, "initial_z_step must be > 0");
  require(initial_xy_step_um > 0.0, "initial_xy_step must be > 0");
  require(step_shrink > 0.0 && step_shrink < 1.0, "step_shrink must lie in (0, 1)");
  require(min_counts_worse >= 0 && min_counts_better >= 0 && xy_min_counts >= 0,
          "count limits must be >= 0");
  require(xy_max_meas_time_s > 0.0, "xy_max_meas_time must be > 0");
  require(probe_integration_s > 0.0, "probe_integration must be > 0");
  require(integration_growth >= 1.0, "integration_growth must be >= 1");
  require(max_integration_s >= probe_integration_s, "max_integration must be >= probe_integration");
}

const char* to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::converged: return "converged";
    case Outcome::timed_out: return "timed_out";
    case Outcome::aborted_no_signal: return "aborted_no_signal";
  }
  return "unknown";
}

HeuristicAligner::HeuristicAligner(env::CouplingStage& stage, HeuristicConfig config, double c_max_cps)
    : stage_(stage), config_(std::move(config)), c_max_(c_max_cps) {
  config_.validate();
  if (!(c_max_cps > 0.0)) throw DomainError("HeuristicAligner: c_max must be > 0");
  z_threshold_ = decision_threshold(config_.z_confidence);
  xy_threshold_ = decision_threshold(config_.xy_confidence);
  z_step_ = config_.initial_z_step_um;
  xy_step_ = config_.initial_xy_step_um;
  accepted_pose_ = stage_.pose();
}

bool HeuristicAligner::budget_exhausted() const { return stage_.elapsed_s() >= config_.time_budget_s; }

bool HeuristicAligner::is_success(const env::MeasurementRecord& rec) const {
  return rec.rate_cps >= config_.success_fraction * c_max_;
}

std::optional<env::MeasurementRecord> HeuristicAligner::measure_adaptive(long long target_counts,
                                                                         double cap_s) {
  env::MeasurementRecord total;
  double segment = std::min(config_.probe_integration_s, cap_s);
  while (true) {
    if (budget_exhausted()) return std::nullopt;
    const auto part = stage_.measure(segment);
    total = total.integration_time_s > 0.0 ? total.merged(part) : part;
    if (total.counts >= target_counts || total.integration_time_s >= cap_s) return total;
    segment = std::min(segment * config_.integration_growth, cap_s - total.integration_time_s);
  }
}

TraceEvent& HeuristicAligner::log(const env::MeasurementRecord& rec, std::optional<double> w,
                                  std::string decision, std::string phase) {
  trace_.events.push_back(
      TraceEvent{stage_.elapsed_s(), stage_.pose(), rec, w, std::move(decision), std::move(phase)});
  if (!trace_.converged_at_s && is_success(rec)) trace_.converged_at_s = stage_.elapsed_s();
  return trace_.events.back();
}

void HeuristicAligner::accept(const env::Pose& pose, const env::MeasurementRecord& rec) {
  accepted_pose_ = pose;
  accepted_ = rec;
}

void HeuristicAligner::finish(Outcome outcome) {
  trace_.outcome = outcome;
  trace_.elapsed_s = stage_.elapsed_s();
  trace_.final_pose = stage_.pose();
}

int HeuristicAligner::consecutive_failures() const {
  int n = 0;
  for (auto it = history_.rbegin(); it != history_.rend() && *it != ProbeResult::better; ++it) ++n;
  return n;
}

bool HeuristicAligner::verify_signal() {
  env::Pose p = stage_.pose();
  p.z_um = config_.z_blind_jump_um;
  stage_.move_to(p);
  const auto rec = stage_.measure(config_.initial_integration_s);
  const double limit =
      background_threshold(stage_.model().background_rate_cps, config_.initial_integration_s);
  const bool ok = static_cast<double>(rec.counts) > limit;
  log(rec, std::nullopt, ok ? "signal" : "abort", "verify");
  if (!ok) {
    finish(Outcome::aborted_no_signal);
    return false;
  }
  accept(stage_.pose(), rec);
  return true;
}

PhaseStatus HeuristicAligner::axial_search() {
  const double min_step = config_.initial_z_step_um / 10.0;
  if (z_step_ < min_step) z_step_ = config_.initial_z_step_um * config_.step_shrink * config_.step_shrink;
  history_.clear();
  int accepts = 0;

  while (true) {
    env::Pose probe = accepted_pose_;
    probe.z_um += z_dir_ * z_step_;
    stage_.move_to(probe);
    const auto rec = measure_adaptive(config_.min_counts_better, config_.max_integration_s);
    if (!rec) return PhaseStatus::timed_out;
    const double w = w_statistic(*rec, accepted_);

    if (is_success(*rec)) {
      log(*rec, w, "success", "axial");
      accept(stage_.pose(), *rec);
      return PhaseStatus::converged;
    }

    ProbeResult result = ProbeResult::inconclusive;
    if (w > z_threshold_ && rec->counts >= config_.min_counts_better) {
      result = ProbeResult::better;
    } else if (w < -z_threshold_ && rec->counts >= config_.min_counts_worse) {
      result = ProbeResult::worse;
    }
    history_.push_back(result);
    if (history_.size() > kHistoryLength) history_.pop_front();

    if (result == ProbeResult::better) {
      log(*rec, w, "accept", "axial");
      accept(stage_.pose(), *rec);
      if (++accepts >= kMaxAcceptsPerPhase) return PhaseStatus::switch_axis;
      continue;
    }

    const int failures = consecutive_failures();
    if (failures == 1) {
      z_dir_ = -z_dir_;
      if (result == ProbeResult::worse) {
        z_step_ *= config_.step_shrink;
        log(*rec, w, "reverse_shrink", "axial");
      } else {
        log(*rec, w, "reverse", "axial");
      }
    } else if (failures <= 3) {
      log(*rec, w, "reject", "axial");
      // Return to the last good coordinate and refresh its reference count.
      stage_.move_to(accepted_pose_);
      const auto base = measure_adaptive(config_.min_counts_better, config_.max_integration_s);
      if (!base) return PhaseStatus::timed_out;
      accepted_ = *base;
      z_step_ *= config_.step_shrink;
      z_dir_ = -z_dir_;
      log(*base, std::nullopt, "backtrack", "axial");
      if (is_success(*base)) return PhaseStatus::converged;
    } else {
      log(*rec, w, "end_axis", "axial");
      stage_.move_to(accepted_pose_);
      return PhaseStatus::switch_axis;
    }
    if (z_step_ < min_step) {
      stage_.move_to(accepted_pose_);
      return PhaseStatus::switch_axis;
    }
  }
}

PhaseStatus HeuristicAligner::radial_search() {
  const double min_step = config_.initial_xy_step_um / 10.0;
  if (xy_step_ < min_step) xy_step_ = config_.initial_xy_step_um * config_.step_shrink * config_.step_shrink;
  int accepts = 0;

  while (true) {
    const double cx = accepted_pose_.x_um();
    const double cy = accepted_pose_.y_um();
    const std::array<std::pair<double, double>, 4> offsets{
        {{xy_step_, 0.0}, {-xy_step_, 0.0}, {0.0, xy_step_}, {0.0, -xy_step_}}};

    std::size_t best_event = 0;
    std::optional<env::MeasurementRecord> best;
    env::Pose best_pose;
    double best_w = 0.0;
    for (const auto& [dx, dy] : offsets) {
      stage_.move_to(env::Pose::from_cartesian(cx + dx, cy + dy, accepted_pose_.z_um));
      const auto rec = measure_adaptive(config_.xy_min_counts, config_.xy_max_meas_time_s);
      if (!rec) return PhaseStatus::timed_out;
      const double w = w_statistic(*rec, accepted_);
      if (is_success(*rec)) {
        log(*rec, w, "success", "radial");
        accept(stage_.pose(), *rec);
        return PhaseStatus::converged;
      }
      log(*rec, w, "reject", "radial");
      if (!best || rec->rate_cps > best->rate_cps) {
        best = rec;
        best_pose = stage_.pose();
        best_w = w;
        best_event = trace_.events.size() - 1;
      }
    }

    const bool significant = best_w > xy_threshold_ && best->counts >= config_.xy_min_counts &&
                             best->integration_time_s <= config_.xy_max_meas_time_s;
    if (significant) {
      trace_.events[best_event].decision = "accept";
      stage_.move_to(best_pose);
      accept(best_pose, *best);
      if (++accepts >= kMaxAcceptsPerPhase) return PhaseStatus::switch_axis;
    } else {
      trace_.events.back().decision = "shrink";
      stage_.move_to(accepted_pose_);
      xy_step_ *= config_.step_shrink;
      if (xy_step_ < min_step) return PhaseStatus::switch_axis;
    }
  }
}

SearchTrace HeuristicAligner::run() {
  trace_ = SearchTrace{};
  if (!verify_signal()) return trace_;
  if (is_success(accepted_)) {
    finish(Outcome::converged);
    return trace_;
  }
  bool axial = true;
  while (!budget_exhausted()) {
    const PhaseStatus status = axial ? axial_search() : radial_search();
    if (status == PhaseStatus::converged) {
      finish(Outcome::converged);
      return trace_;
    }
    if (status == PhaseStatus::timed_out) break;
    axial = !axial;
  }
  finish(Outcome::timed_out);
  return trace_;
}

SearchTrace run_alignment(env::CouplingStage& stage, const HeuristicConfig& config, double c_max_cps) {
  return HeuristicAligner(stage, config, c_max_cps).run();
}

void write_trace_csv(std::ostream& os, const SearchTrace& trace) {
  os << "t_s,r_um,theta_rad,z_um,counts,int_time_s,W,decision,phase\n";
  for (const auto& e : trace.events) {
    io::CsvRow row;
    row.add(e.t_s)
        .add(e.pose.r_um)
        .add(e.pose.theta_rad)
        .add(e.pose.z_um)
        .add(static_cast<long long>(e.record.counts))
        .add(e.record.integration_time_s)
        .add(e.w)
        .add(std::string_view(e.decision))
        .add(std::string_view(e.phase));
    os << row;
  }
}

}  // namespace qalign::heuristic
