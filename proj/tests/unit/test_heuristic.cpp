#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "qalign/env/alignment_env.hpp"
#include "qalign/errors.hpp"
#include "qalign/heuristic/aligner.hpp"
#include "qalign/heuristic/w_test.hpp"
#include "qalign/seeding.hpp"

using namespace qalign;
using namespace qalign::heuristic;
using env::CouplingModel;
using env::CouplingStage;
using env::MeasurementRecord;
using env::Pose;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Independent quantile oracle: bisection on the erfc-based CDF.
double quantile_oracle(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

HeuristicConfig no_success_config() {
  HeuristicConfig c;
  c.success_fraction = 1.0;
  return c;
}

constexpr double kUnreachableCmax = 1e9;

}  // namespace

TEST_CASE("W statistic") {
  const auto a = MeasurementRecord::from_counts(1000, 1.0);
  CHECK(w_statistic(a, a) == 0.0);

  const auto b = MeasurementRecord::from_counts(1200, 1.0);
  const double expected = std::log(1.2) / std::sqrt(1.0 / 1000 + 1.0 / 1200);
  CHECK(w_statistic(b, a) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(w_statistic(b, a) > 4.0);

  // Equal rates at different integration times.
  CHECK(w_statistic(MeasurementRecord::from_counts(2000, 2.0), a) == doctest::Approx(0.0).scale(1.0));

  const auto zero = MeasurementRecord::from_counts(0, 1.0);
  CHECK(std::isinf(w_statistic(zero, a)));
  CHECK(w_statistic(zero, a) < 0.0);
  CHECK(w_statistic(a, zero) < 0.0);
}

TEST_CASE("decision thresholds match the normal quantile oracle") {
  CHECK(decision_threshold(0.995) == doctest::Approx(2.5758293035489).epsilon(1e-10));
  CHECK(decision_threshold(0.999) == doctest::Approx(3.0902323061678).epsilon(1e-10));
  for (double p : {0.6, 0.9, 0.975, 0.995, 0.999, 0.9999}) {
    CHECK(decision_threshold(p) == doctest::Approx(quantile_oracle(p)).epsilon(1e-9));
  }
  CHECK(std::abs(decision_threshold(0.5 + 1e-12)) < 1e-9);
  CHECK_THROWS_AS(decision_threshold(0.5), DomainError);
  CHECK_THROWS_AS(decision_threshold(1.0), DomainError);
  CHECK_THROWS_AS(decision_threshold(0.2), DomainError);
}

TEST_CASE("background threshold") {
  CHECK(background_threshold(50.0, 120.0) == doctest::Approx(6000.0 + 5.0 * std::sqrt(6000.0)));
  CHECK(background_threshold(50.0, 120.0) == doctest::Approx(6387.3).epsilon(1e-4));
}

TEST_CASE("W is standard normal under the null") {
  const CouplingModel m;
  const Pose p{60.0, 0.5, 1800.0};
  env::Rng rng(derive_seed(123, 0));
  constexpr int kN = 20000;
  std::vector<double> w(kN);
  for (int i = 0; i < kN; ++i) {
    const auto prev = env::measure(m, p, 0.2, rng);
    const auto cur = env::measure(m, p, 0.2, rng);
    w[i] = w_statistic(cur, prev);
  }
  std::sort(w.begin(), w.end());
  double ks = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double f = normal_cdf(w[i]);
    ks = std::max({ks, std::abs(f - double(i) / kN), std::abs(f - double(i + 1) / kN)});
  }
  CHECK(ks <= 0.02);

  auto rate_above = [&](double thr) {
    return double(std::count_if(w.begin(), w.end(), [thr](double x) { return x > thr; })) / kN;
  };
  CHECK(rate_above(decision_threshold(0.995)) == doctest::Approx(0.005).epsilon(0.4));
  CHECK(rate_above(decision_threshold(0.999)) <= 0.002);
}

TEST_CASE("config validation") {
  HeuristicConfig c;
  CHECK_NOTHROW(c.validate());
  c.step_shrink = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = HeuristicConfig{};
  c.success_fraction = 0.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = HeuristicConfig{};
  c.z_confidence = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("verify_signal: aligned passes, zero coupling aborts") {
  const CouplingModel m;
  CouplingStage aligned(m, 1, Pose{0.0, 0.0, 0.0});
  HeuristicAligner ha(aligned, no_success_config(), kUnreachableCmax);
  CHECK(ha.verify_signal());
  CHECK(aligned.pose().z_um == 1580.0);
  CHECK(aligned.elapsed_s() == 120.0);

  CouplingStage dark(m, 1, Pose{1e5, 0.0, 0.0});
  const auto trace = run_alignment(dark, HeuristicConfig{}, m.peak_rate_cps());
  CHECK(trace.outcome == Outcome::aborted_no_signal);
  CHECK(trace.events.size() == 1);
}

TEST_CASE("start at the optimum converges in the first measurement") {
  const CouplingModel m;
  CouplingStage stage(m, 4, Pose{0.0, 0.0, m.z_optimal_um});
  const auto trace = run_alignment(stage, HeuristicConfig{}, m.peak_rate_cps());
  CHECK(trace.outcome == Outcome::converged);
  CHECK(trace.events.size() == 1);
  REQUIRE(trace.converged_at_s);
  CHECK(*trace.converged_at_s == 120.0);
}

TEST_CASE("time_budget = 0 times out right after verification") {
  const CouplingModel m;
  CouplingStage stage(m, 4, Pose{150.0, 0.0, 0.0});
  HeuristicConfig c;
  c.time_budget_s = 0.0;
  const auto trace = run_alignment(stage, c, m.peak_rate_cps());
  CHECK(trace.outcome == Outcome::timed_out);
  CHECK(trace.events.size() == 1);
  CHECK(trace.elapsed_s == c.initial_integration_s);
}

TEST_CASE("noise-free axial search: overshoot reverses with a 2/3 step") {
  const CouplingModel m;
  HeuristicConfig c = no_success_config();
  c.z_blind_jump_um = m.z_optimal_um + 150.0;
  CouplingStage stage(m, 1, Pose{0.0, 0.0, 0.0});
  stage.set_noise_free(true);
  HeuristicAligner ha(stage, c, kUnreachableCmax);
  REQUIRE(ha.verify_signal());
  ha.axial_search();
  const auto& ev = ha.trace().events;
  REQUIRE(ev.size() >= 2);
  CHECK(ev[1].decision == "reverse_shrink");
  CHECK(ev[1].pose.z_um == doctest::Approx(m.z_optimal_um + 350.0));
  REQUIRE(ev.size() >= 3);
  CHECK(ev[2].pose.z_um == doctest::Approx(m.z_optimal_um + 150.0 - 200.0 * 2.0 / 3.0));
}

TEST_CASE("noise-free axial search: monotone approach and final bracket") {
  const CouplingModel m;
  HeuristicConfig c = no_success_config();
  c.z_blind_jump_um = m.z_optimal_um - 900.0;
  CouplingStage stage(m, 1, Pose{0.0, 0.0, 0.0});
  stage.set_noise_free(true);
  HeuristicAligner ha(stage, c, kUnreachableCmax);
  REQUIRE(ha.verify_signal());

  ha.axial_search();
  // First phase: three uphill accepts, no reversals.
  int accepts = 0;
  for (const auto& e : ha.trace().events) {
    CHECK(e.decision.find("reverse") == std::string::npos);
    if (e.decision == "accept") ++accepts;
  }
  CHECK(accepts == 3);
  CHECK(ha.accepted_pose().z_um == doctest::Approx(m.z_optimal_um - 300.0));

  for (int k = 0; k < 8; ++k) ha.axial_search();
  const double dz = std::abs(ha.accepted_pose().z_um - m.z_optimal_um);
  // Either within one final step of the optimum, or statistically
  // indistinguishable from the peak at the probe integration time.
  const auto here = MeasurementRecord::from_counts(
      std::llround(env::true_rate(m, ha.accepted_pose()) * c.probe_integration_s), c.probe_integration_s);
  const auto peak = MeasurementRecord::from_counts(std::llround(m.peak_rate_cps() * c.probe_integration_s),
                                                   c.probe_integration_s);
  const bool bracketed = dz <= ha.z_step_um() + 1e-9;
  const bool unresolvable = w_statistic(peak, here) <= ha.z_threshold();
  CHECK((bracketed || unresolvable));
  CHECK(dz < 60.0);
}

TEST_CASE("noise-free radial search") {
  const CouplingModel m;
  const HeuristicConfig c = no_success_config();

  SUBCASE("offset by one step toward a probe: that probe wins") {
    CouplingStage stage(m, 1, Pose::from_cartesian(0.0, c.initial_xy_step_um, 0.0));
    stage.set_noise_free(true);
    HeuristicAligner ha(stage, c, kUnreachableCmax);
    REQUIRE(ha.verify_signal());
    ha.radial_search();
    const auto& ev = ha.trace().events;
    REQUIRE(ev.size() >= 5);
    // Probe order: +x, -x, +y, -y; the -y probe lands on the axis.
    CHECK(ev[4].decision == "accept");
    CHECK(ev[4].pose.r_um == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ha.accepted_pose().r_um < 1e-9);
  }

  SUBCASE("center already optimal: no move, square shrinks") {
    CouplingStage stage(m, 1, Pose{0.0, 0.0, 0.0});
    stage.set_noise_free(true);
    HeuristicAligner ha(stage, c, kUnreachableCmax);
    REQUIRE(ha.verify_signal());
    const auto status = ha.radial_search();
    CHECK(status == PhaseStatus::switch_axis);
    CHECK(ha.accepted_pose().r_um == 0.0);
    CHECK(ha.xy_step_um() < c.initial_xy_step_um / 10.0);
    for (const auto& e : ha.trace().events) CHECK(e.decision != "accept");
    // First square: four probes at 40 um, the second at 40 * 2/3.
    CHECK(ha.trace().events[1].pose.r_um == doctest::Approx(40.0));
    CHECK(ha.trace().events[4].decision == "shrink");
    CHECK(ha.trace().events[5].pose.r_um == doctest::Approx(40.0 * 2.0 / 3.0));
  }
}

TEST_CASE("accepted positions have non-decreasing true rate (noise-free)") {
  const CouplingModel m;
  HeuristicConfig c = no_success_config();
  for (double r0 : {60.0, 180.0, 290.0}) {
    CouplingStage stage(m, 3, Pose{r0, 1.1, 400.0});
    stage.set_noise_free(true);
    const auto trace = run_alignment(stage, c, kUnreachableCmax);
    double last = 0.0;
    int accepts = 0;
    for (const auto& e : trace.events) {
      const double rate = env::true_rate(m, e.pose);
      if (e.decision == "accept" || e.decision == "signal") {
        CHECK(rate >= last - 1e-9);
        last = rate;
        ++accepts;
      } else if (e.decision == "backtrack") {
        CHECK(rate == doctest::Approx(last));
      }
    }
    CHECK(accepts > 3);
    CHECK(env::true_rate(m, trace.final_pose) > 0.9 * m.peak_rate_cps());
  }
}

TEST_CASE("budget safety, increasing timestamps and determinism") {
  env::EnvConfig ecfg;
  for (double budget : {300.0, 900.0, 3600.0}) {
    HeuristicConfig c;
    c.time_budget_s = budget;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      env::Rng rng(derive_seed(seed, 9));
      const Pose start = env::sample_start_pose(ecfg, rng);
      CouplingStage stage(ecfg.coupling, seed, start);
      const auto trace = run_alignment(stage, c, ecfg.c_max());
      CHECK(trace.elapsed_s <= budget + std::max(c.max_integration_s, c.initial_integration_s));
      for (std::size_t i = 1; i < trace.events.size(); ++i) {
        CHECK(trace.events[i].t_s > trace.events[i - 1].t_s);
      }
      if (trace.outcome == Outcome::converged) {
        REQUIRE(trace.converged_at_s);
        CHECK(*trace.converged_at_s == trace.elapsed_s);
        CHECK(trace.events.back().record.rate_cps >= 0.9 * ecfg.c_max());
      }
    }
  }

  auto csv = [&](std::uint64_t seed) {
    CouplingStage stage(ecfg.coupling, seed, Pose{200.0, 2.0, 900.0});
    std::ostringstream os;
    write_trace_csv(os, run_alignment(stage, HeuristicConfig{}, ecfg.c_max()));
    return os.str();
  };
  const auto a = csv(5), b = csv(5), d = csv(6);
  CHECK(a == b);
  CHECK(a != d);
  CHECK(a.rfind("t_s,r_um,theta_rad,z_um,counts,int_time_s,W,decision,phase\n", 0) == 0);
}

TEST_CASE("default starts converge") {
  env::EnvConfig ecfg;
  int converged = 0;
  constexpr int kRuns = 40;
  for (int seed = 0; seed < kRuns; ++seed) {
    env::Rng rng(derive_seed(seed, 11));
    CouplingStage stage(ecfg.coupling, derive_seed(seed, 12), env::sample_start_pose(ecfg, rng));
    if (run_alignment(stage, HeuristicConfig{}, ecfg.c_max()).outcome == Outcome::converged) ++converged;
  }
  CHECK(converged >= 36);
}
