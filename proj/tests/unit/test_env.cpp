#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qalign/env/alignment_env.hpp"
#include "qalign/env/coupling.hpp"
#include "qalign/env/stage.hpp"
#include "qalign/errors.hpp"

using namespace qalign;
using namespace qalign::env;

TEST_CASE("true_rate at the optimum, in the tail and one Rayleigh range off") {
  const CouplingModel m;
  CHECK(true_rate(m, 0.0, 0.0, m.z_optimal_um) == doctest::Approx(m.background_rate_cps + m.max_rate_cps));
  CHECK(true_rate(m, 1e5, 0.0, m.z_optimal_um) == doctest::Approx(m.background_rate_cps));
  CHECK(true_rate(m, 0.0, 1e5, 0.0) == doctest::Approx(m.background_rate_cps));
  CHECK(true_rate(m, 0.0, 0.0, m.z_optimal_um + m.axial_rayleigh_um) ==
        doctest::Approx(m.background_rate_cps + m.max_rate_cps / 2.0));
}

TEST_CASE("true_rate is rotationally symmetric") {
  const CouplingModel m;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double r = 400.0 * u(rng), z = 3000.0 * u(rng);
    const double ref = true_rate(m, Pose{r, 0.0, z});
    const double th = 2.0 * std::numbers::pi * u(rng);
    CHECK(true_rate(m, r * std::cos(th), r * std::sin(th), z) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(true_rate(m, Pose{r, th + 2.0 * std::numbers::pi, z}) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("Poisson measurement matches the analytic mean") {
  const CouplingModel m;
  const Pose p{80.0, 1.0, 1700.0};
  const double dt = 0.5;
  const double mean = true_rate(m, p) * dt;
  Rng rng(11);
  constexpr int kN = 10000;
  double sum = 0.0;
  for (int i = 0; i < kN; ++i) sum += static_cast<double>(measure(m, p, dt, rng).counts);
  const double sem = std::sqrt(mean / kN);
  CHECK(std::abs(sum / kN - mean) < 3.0 * sem);
}

TEST_CASE("rate variance scales as 1/dt") {
  const CouplingModel m;
  const Pose p{0.0, 0.0, m.z_optimal_um};
  auto rate_var = [&](double dt) {
    Rng rng(5);
    constexpr int kN = 4000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < kN; ++i) {
      const double r = measure(m, p, dt, rng).rate_cps;
      s += r;
      s2 += r * r;
    }
    const double mu = s / kN;
    return s2 / kN - mu * mu;
  };
  const double ratio = rate_var(0.01) / rate_var(0.04);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("measurement record invariants and seeded determinism") {
  const CouplingModel m;
  Rng a(99), b(99);
  const Pose p{30.0, 0.3, 1500.0};
  for (int i = 0; i < 20; ++i) {
    const auto ra = measure(m, p, 1.5, a);
    const auto rb = measure(m, p, 1.5, b);
    CHECK(ra == rb);
    CHECK(ra.rate_cps == static_cast<double>(ra.counts) / 1.5);
  }
  CHECK_THROWS_AS(measure(m, p, 0.0, a), DomainError);
}

TEST_CASE("invalid coupling models are rejected") {
  CouplingModel m;
  m.max_rate_cps = 10.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = CouplingModel{};
  m.lateral_waist_um = 0.0;
  CHECK_THROWS_AS(CouplingStage(m, 1), DomainError);
}

TEST_CASE("reward bonus formula") {
  const EnvConfig cfg;
  const double sb = cfg.bonus_step();
  CHECK(sb == doctest::Approx(cfg.c_max() / 20.0));
  CHECK(shaped_reward(cfg.reward, sb, 0.0) == doctest::Approx(-0.05));
  CHECK(shaped_reward(cfg.reward, sb, -5000.0) == doctest::Approx(-0.05));
  CHECK(shaped_reward(cfg.reward, sb, 0.99 * sb) == doctest::Approx(-0.05));
  CHECK(bonus(cfg.reward, sb, 2.5 * sb) == doctest::Approx(1.2));
  // 1.2 - 0.05 is clipped to the upper bound.
  CHECK(shaped_reward(cfg.reward, sb, 2.5 * sb) == doctest::Approx(1.0));
  CHECK(shaped_reward(cfg.reward, sb, 1.0 * sb) == doctest::Approx(0.55));
}

TEST_CASE("reset: observation layout and back-filled history") {
  EnvConfig cfg;
  AlignmentEnv env(cfg, 17);
  for (int k = 0; k < 50; ++k) {
    const auto obs = env.reset();
    REQUIRE(obs.size() == 20);
    for (int f = 1; f < 5; ++f) {
      for (int c = 0; c < 4; ++c) CHECK(obs[4 * f + c] == obs[c]);
    }
    const Pose& p = env.pose();
    CHECK(p.r_um <= cfg.mdp.start_r_max_um);
    CHECK(std::abs(p.z_um - cfg.coupling.z_optimal_um) <= cfg.mdp.start_dz_max_um);
    CHECK(env.elapsed_s() == cfg.mdp.t_step_s);
  }
}

TEST_CASE("step before reset is a state error") {
  AlignmentEnv env(EnvConfig{}, 1);
  CHECK_THROWS_AS(env.step(StepAction{}), StateError);
}

TEST_CASE("action scaling: (1,0,0) moves r by exactly 72 um") {
  AlignmentEnv env(EnvConfig{}, 2);
  env.reset_to(Pose{100.0, 1.0, 1000.0});
  const auto res = env.step(StepAction{1.0, 0.0, 0.0});
  CHECK(res.info.pose.r_um == 172.0);
  CHECK(res.info.pose.theta_rad == 1.0);
  CHECK(res.info.pose.z_um == 1000.0);

  const auto res2 = env.step(StepAction{0.0, 0.0, -1.0});
  CHECK(res2.info.pose.z_um == 1000.0 - 563.0);

  // Out-of-range actions are clamped.
  const auto res3 = env.step(StepAction{5.0, 0.0, 0.0});
  CHECK(res3.info.pose.r_um == 244.0);
}

TEST_CASE("radial clipping, theta wrap and time bookkeeping under random actions") {
  EnvConfig cfg;
  cfg.mdp.episode_steps = 100000;
  AlignmentEnv env(cfg, 8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  env.reset();
  const double t0 = env.elapsed_s();
  int n = 0;
  for (; n < 500 && env.episode_active(); ++n) {
    const double before = env.pose().theta_rad;
    const auto res = env.step(StepAction{u(rng), u(rng), u(rng)});
    CHECK(res.info.pose.r_um >= 0.0);
    CHECK(res.info.pose.theta_rad >= 0.0);
    CHECK(res.info.pose.theta_rad < 2.0 * std::numbers::pi);
    const double dth = std::abs(std::remainder(res.info.pose.theta_rad - before, 2.0 * std::numbers::pi));
    CHECK(dth <= std::numbers::pi + 1e-12);
    CHECK(res.reward >= cfg.reward.clip_lo);
    CHECK(res.reward <= cfg.reward.clip_hi);
    if (res.info.delta_c < cfg.bonus_step()) CHECK(res.reward == doctest::Approx(-cfg.reward.step_penalty));
  }
  CHECK(env.elapsed_s() == doctest::Approx(t0 + n * cfg.mdp.t_step_s).epsilon(1e-15));
}

TEST_CASE("episode terminates at success and at the step budget") {
  EnvConfig cfg;
  cfg.mdp.episode_steps = 3;
  AlignmentEnv env(cfg, 5);
  env.reset_to(Pose{250.0, 0.0, cfg.coupling.z_optimal_um + 1000.0});
  StepResult res;
  for (int i = 0; i < 3; ++i) res = env.step(StepAction{0.0, 0.0, 0.0});
  CHECK(res.done);
  CHECK(res.info.truncated);
  CHECK_FALSE(res.info.success);
  CHECK_THROWS_AS(env.step(StepAction{}), StateError);

  env.reset_to(Pose{72.0, 0.0, cfg.coupling.z_optimal_um});
  CHECK(env.episode_active());
  res = env.step(StepAction{-1.0, 0.0, 0.0});
  CHECK(res.info.success);
  CHECK(res.done);
  CHECK(res.reward > 0.0);

  env.reset_to(Pose{0.0, 0.0, cfg.coupling.z_optimal_um});
  CHECK_FALSE(env.episode_active());
  CHECK(env.last_success());
}

TEST_CASE("seeded trajectories are identical") {
  auto run = [](std::uint64_t seed) {
    AlignmentEnv env(EnvConfig{}, seed);
    std::vector<TrajectoryRow> rows;
    env.reset();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 40 && env.episode_active(); ++i) {
      const auto res = env.step(StepAction{u(rng), u(rng), u(rng)});
      rows.push_back({res.info.step, res.info.pose, res.info.measurement.counts,
                      res.info.measurement.rate_cps, res.reward, res.done});
    }
    std::ostringstream os;
    write_trajectory_csv(os, rows);
    return os.str();
  };
  const auto a = run(21), b = run(21), c = run(22);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.rfind("step,r_um,theta_rad,z_um,counts,rate_cps,reward,done\n", 0) == 0);
}

TEST_CASE("observation normalization") {
  EnvConfig cfg;
  AlignmentEnv env(cfg, 3);
  const auto obs = env.reset_to(Pose{144.0, std::numbers::pi, 1126.0});
  CHECK(obs[0] == doctest::Approx(0.2));
  CHECK(obs[1] == doctest::Approx(0.0));
  CHECK(obs[2] == doctest::Approx(0.2));
  CHECK(obs[3] == doctest::Approx(env.last_rate_cps() / cfg.c_max()));
}
