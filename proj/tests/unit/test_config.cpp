#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "qalign/config/run_config.hpp"
#include "qalign/errors.hpp"

using namespace qalign;
using namespace qalign::config;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto p = fs::temp_directory_path() / "qalign_test_config";
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("defaults survive a JSON round trip") {
  const RunConfig c;
  CHECK(merge_json(to_json(c)) == c);
  CHECK(to_json(c)["sac"]["hidden"] == nlohmann::json::array({256, 256}));
  CHECK(to_json(c)["heuristic"]["z_blind_jump_um"] == 1580.0);
  CHECK(to_json(c)["sac"]["batch_size"] == 128);
}

TEST_CASE("strict parsing") {
  using nlohmann::json;
  CHECK_THROWS_AS(merge_json(json::parse(R"({"sac": {"gama": 0.9}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(json::parse(R"({"optimizer": {}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(json::parse(R"({"sac": {"gamma": "high"}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(json::parse(R"({"sac": {"batch_size": 12.5}})")), ConfigError);
  CHECK_THROWS_AS(merge_json(json::parse(R"({"sac": 3})")), ConfigError);
  CHECK_THROWS_AS(merge_json(json::parse(R"([1, 2])")), ConfigError);

  const auto c = merge_json(json::parse(R"({"sac": {"gamma": 0.99, "hidden": [64, 32]}, "eval": {"trials": 5}})"));
  CHECK(c.sac.gamma == 0.99);
  CHECK(c.sac.hidden == std::vector<int>{64, 32});
  CHECK(c.eval.trials == 5);
  CHECK(c.sac.batch_size == 128);
}

TEST_CASE("precedence: defaults < file < overrides < environment") {
  const auto path = temp_dir() / "prec.json";
  {
    std::ofstream f(path);
    f << R"({"sac": {"gamma": 0.5, "tau": 0.01}, "mdp": {"t_step_s": 20}, "eval": {"trials": 9}})";
  }
  const auto c = resolve(path, {"sac.gamma=0.7", "mdp.t_step_s=25"},
                         {{"QALIGN_SAC__GAMMA", "0.9"}, {"QALIGN_eval__Trials", "11"}, {"HOME", "/root"},
                          {"QALIGN_UNRELATED", "x"}});
  CHECK(c.sac.gamma == 0.9);            // environment wins
  CHECK(c.mdp.t_step_s == 25.0);        // override beats file
  CHECK(c.sac.tau == 0.01);             // file beats default
  CHECK(c.eval.trials == 11);           // case-insensitive names
  CHECK(c.sac.batch_size == 128);       // default

  CHECK_THROWS_AS(resolve(std::nullopt, {"sac.nope=1"}, {}), ConfigError);
  CHECK_THROWS_AS(resolve(std::nullopt, {"gamma=1"}, {}), ConfigError);
  CHECK_THROWS_AS(resolve(std::nullopt, {}, {{"QALIGN_SAC__NOPE", "1"}}), ConfigError);
  CHECK_THROWS_AS(resolve(temp_dir() / "missing.json", {}, {}), ConfigError);
}

TEST_CASE("validation errors are config errors") {
  CHECK_THROWS_AS(resolve(std::nullopt, {"heuristic.step_shrink=1.5"}, {}), ConfigError);
  CHECK_THROWS_AS(resolve(std::nullopt, {"coupling.lateral_waist_um=0"}, {}), ConfigError);
  CHECK_THROWS_AS(resolve(std::nullopt, {"crystal.sweep_steps=0"}, {}), ConfigError);
  CHECK_THROWS_AS(resolve(std::nullopt, {"eval.n_thresholds=1"}, {}), ConfigError);
}

TEST_CASE("resolved config echo re-parses identically") {
  auto c = resolve(std::nullopt, {"sac.gamma=0.123456789012345", "crystal.temperature_c=31.7", "sac.hidden=[12,7]"},
                   {});
  const auto path = temp_dir() / "echo.json";
  write_config(path, c);
  CHECK(load_file(path) == c);
}
