#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qalign/errors.hpp"
#include "qalign/eval/campaign.hpp"
#include "qalign/eval/roc.hpp"
#include "qalign/rl/sac.hpp"

using namespace qalign;
using namespace qalign::eval;

namespace {

std::vector<TrialResult> from_times(const std::vector<double>& times, int failures = 0,
                                    Policy policy = Policy::heuristic) {
  std::vector<TrialResult> out;
  long long id = 0;
  for (double t : times) {
    TrialResult r;
    r.trial_id = id;
    r.seed = std::uint64_t(100 + id);
    r.policy = policy;
    r.converged = true;
    r.time_s = t;
    out.push_back(r);
    ++id;
  }
  for (int i = 0; i < failures; ++i) {
    TrialResult r;
    r.trial_id = id;
    r.seed = std::uint64_t(100 + id);
    r.policy = policy;
    out.push_back(r);
    ++id;
  }
  return out;
}

// Brute-force oracle: midpoint quadrature of A(t) on n cells.
double grid_auc(const std::vector<TrialResult>& results, int n, double horizon = kRocHorizonS) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) * horizon / n;
    int c = 0;
    for (const auto& r : results) c += r.converged && *r.time_s < t;
    s += double(c) / double(results.size());
  }
  return s / n;
}

// Trapezoid over the curve's own uniform grid.
double trapezoid(const RocCurve& c) {
  double s = 0.0;
  for (std::size_t i = 1; i < c.thresholds_s.size(); ++i) {
    s += 0.5 * (c.accuracy[i] + c.accuracy[i - 1]) * (c.thresholds_s[i] - c.thresholds_s[i - 1]);
  }
  return s / c.thresholds_s.back();
}

}  // namespace

TEST_CASE("accuracy_at examples") {
  const auto zero = from_times({0.0, 0.0, 0.0});
  CHECK(accuracy_at(zero, 1e-9) == 1.0);
  CHECK(accuracy_at(zero, 0.0) == 0.0);  // strict inequality
  CHECK(accuracy_at(from_times({}, 4), 3600.0) == 0.0);
  CHECK(accuracy_at(from_times({300.0, 900.0, 2700.0}), 1200.0) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(accuracy_at({}, 1.0), DomainError);
}

TEST_CASE("exact AUC examples") {
  CHECK(exact_auc(from_times({1800.0})) == doctest::Approx(0.5));
  CHECK(exact_auc(from_times(std::vector<double>(7, 600.0))) == doctest::Approx(5.0 / 6.0));
  CHECK(exact_auc(from_times({0.0, 0.0})) == 1.0);
  CHECK(exact_auc(from_times({}, 3)) == 0.0);
  CHECK(exact_auc(from_times({4000.0})) == 0.0);
  CHECK_THROWS_AS(roc_curve(from_times({1.0}), 1), DomainError);
}

TEST_CASE("exact AUC agrees with fine-grid quadrature") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 4000.0);
  for (int set = 0; set < 20; ++set) {
    std::vector<double> times(1 + rng() % 40);
    for (auto& t : times) t = u(rng);
    const auto results = from_times(times, int(rng() % 5));
    const double exact = exact_auc(results);
    CHECK(std::abs(exact - grid_auc(results, 100000)) < 1e-3);
    CHECK(std::abs(exact - trapezoid(roc_curve(results, 100001))) < 1e-3);
  }
}

TEST_CASE("curve invariants") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 3600.0);
  std::vector<double> times(30);
  for (auto& t : times) t = u(rng);
  auto results = from_times(times, 5);
  const auto c = roc_curve(results, 200);
  CHECK(c.thresholds_s.front() == 0.0);
  CHECK(c.thresholds_s.back() == 3600.0);
  for (std::size_t i = 1; i < c.accuracy.size(); ++i) CHECK(c.accuracy[i] >= c.accuracy[i - 1]);
  CHECK(c.auc >= 0.0);
  CHECK(c.auc <= 1.0);

  // A jumps exactly at convergence times.
  for (double t : times) {
    CHECK(accuracy_at(results, std::nextafter(t, 1e9)) - accuracy_at(results, t) ==
          doctest::Approx(1.0 / double(results.size())));
  }

  std::shuffle(results.begin(), results.end(), rng);
  const auto c2 = roc_curve(results, 200);
  CHECK(c2.accuracy == c.accuracy);
  CHECK(c2.auc == c.auc);

  results.push_back(TrialResult{999, Policy::heuristic, 1, {}, false, std::nullopt});
  CHECK(exact_auc(results) < c.auc);
}

TEST_CASE("compare_policies") {
  const auto ha = from_times({1200.0, 1800.0, 2400.0}, 1);
  SUBCASE("identical sets") {
    const auto r = compare_policies(ha, ha);
    CHECK(r.delta == 0.0);
    CHECK(r.win_rate == 0.5);
    CHECK(r.median_ha_s == r.median_rl_s);
  }
  SUBCASE("RL faster on every pair") {
    auto rl = from_times({600.0, 700.0, 800.0, 900.0}, 0, Policy::rl);
    const auto r = compare_policies(ha, rl);
    CHECK(r.win_rate == 1.0);
    CHECK(r.auc_rl >= r.auc_ha);
    CHECK(r.median_rl_s == 750.0);
    CHECK(r.median_ha_s == 2100.0);
  }
  SUBCASE("medians count failures as infinite") {
    const auto mostly_failed = from_times({100.0}, 2);
    CHECK(std::isinf(median_time(mostly_failed)));
  }
  SUBCASE("mismatched seeds are rejected") {
    auto rl = ha;
    rl[2].seed += 1;
    CHECK_THROWS_AS(compare_policies(ha, rl), PairingError);
    rl = ha;
    rl.pop_back();
    CHECK_THROWS_AS(compare_policies(ha, rl), PairingError);
    CHECK_THROWS_AS(compare_policies({}, ha), DomainError);
  }
}

TEST_CASE("trials CSV round trip and report layout") {
  auto results = from_times({12.5, 3000.0}, 1, Policy::rl);
  results[0].start = env::Pose{123.456, 1.25, 1580.0};
  results[1].seed = 18446744073709551615ULL;
  std::stringstream ss;
  write_trials_csv(ss, results);
  CHECK(ss.str().rfind("trial_id,policy,seed,r0_um,theta0_rad,z0_um,converged,time_s\n", 0) == 0);
  CHECK(read_trials_csv(ss) == results);

  std::istringstream bad("trial_id,policy\n");
  CHECK_THROWS_AS(read_trials_csv(bad), ConfigError);

  std::ostringstream curve;
  write_roc_csv(curve, roc_curve(results, 3));
  CHECK(curve.str() == "threshold_s,accuracy\n0,0\n1800,0.3333333333333333\n3600,0.6666666666666666\n");

  std::ostringstream rep;
  write_report(rep, compare_policies(results, results));
  CHECK(rep.str().rfind("auc_ha,auc_rl,delta,median_ha_s,median_rl_s,win_rate\n", 0) == 0);
}

TEST_CASE("paired campaign: shared starts, thread-count independence") {
  const env::EnvConfig cfg;
  const heuristic::HeuristicConfig hc;
  const auto serial = run_ha_trials(cfg, hc, 12, 7, 3600.0, 1);
  const auto parallel = run_ha_trials(cfg, hc, 12, 7, 3600.0, 4);
  CHECK(serial == parallel);

  rl::SacConfig sc;
  sc.hidden = {16, 16};
  const rl::SacAgent<float> agent(20, sc, 3);
  const auto rl_results = run_rl_trials(agent, cfg, 12, 7, 3600.0, 3);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].trial_id == long(i));
    CHECK(rl_results[i].start == serial[i].start);
    CHECK(rl_results[i].seed == serial[i].seed);
    CHECK(rl_results[i].policy == Policy::rl);
  }
  CHECK_NOTHROW(compare_policies(serial, rl_results));

  CHECK_THROWS_AS(run_indexed(4, 2,
                              [](int i) -> TrialResult {
                                if (i == 2) throw NumericError("boom");
                                return {};
                              }),
                  NumericError);
}
