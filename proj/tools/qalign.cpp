// qalign: command-line entry point for the SPDC scan, the heuristic and RL
// aligners, ROC evaluation and paired campaigns.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qalign/config/run_config.hpp"
#include "qalign/env/stage.hpp"
#include "qalign/errors.hpp"
#include "qalign/eval/campaign.hpp"
#include "qalign/eval/roc.hpp"
#include "qalign/heuristic/aligner.hpp"
#include "qalign/io/csv.hpp"
#include "qalign/rl/checkpoint.hpp"
#include "qalign/rl/trainer.hpp"
#include "qalign/spdc/report.hpp"

namespace fs = std::filesystem;
using namespace qalign;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kAbort = 3, kNumeric = 4 };

struct Common {
  std::optional<fs::path> config_file;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::optional<fs::path> out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_file, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--set", c.overrides, "Override a config key: block.key=value (repeatable)");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--jobs", c.jobs, "Worker threads for independent trials")->check(CLI::PositiveNumber);
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return os.str();
}

fs::path default_run_dir(const std::string& subcommand) { return fs::path("runs") / (timestamp() + "-" + subcommand); }

config::RunConfig resolve(const Common& c) {
  return config::resolve(c.config_file, c.overrides, config::current_environment());
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  auto os = io::open_output(path);
  body(os);
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

std::string format_seconds(double s) { return std::isinf(s) ? "inf" : io::format_double(s); }

int cmd_spdc_scan(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path dir = c.out.value_or(default_run_dir("spdc-scan"));
  config::write_config(dir / "config.json", cfg);
  const auto rows = spdc::temperature_sweep(cfg.crystal, cfg.sweep.t_min_c, cfg.sweep.t_max_c,
                                            std::size_t(cfg.sweep.steps), std::size_t(cfg.sweep.grid_points));
  write_file(dir / "opo_sweep.csv", [&](std::ostream& os) { spdc::write_opo_csv(os, rows); });
  write_file(dir / "spectral_sweep.csv", [&](std::ostream& os) { spdc::write_sweep_csv(os, rows); });
  const auto wf = spdc::biphoton_wavefunction(cfg.crystal, std::size_t(cfg.sweep.grid_points));
  write_file(dir / "biphoton.csv", [&](std::ostream& os) { spdc::write_wavefunction_csv(os, wf); });
  std::cout << "optimal temperature " << spdc::optimal_temperature(cfg.crystal) << " C\n"
            << "wrote " << dir.string() << "\n";
  return kOk;
}

int cmd_ha_run(const Common& c, const std::optional<fs::path>& trace_path) {
  const auto cfg = resolve(c);
  const fs::path trace_file = trace_path.value_or(default_run_dir("ha-run") / "trace.csv");
  config::write_config(trace_file.parent_path() / "config.json", cfg);

  const auto env_cfg = cfg.env();
  const auto ts = eval::trial_seed(c.seed, 0);
  const auto start = eval::trial_start_pose(env_cfg, ts);
  env::CouplingStage stage(env_cfg.coupling, derive_seed(ts, 1), start);
  const auto trace = heuristic::run_alignment(stage, cfg.heuristic, env_cfg.c_max());
  write_file(trace_file, [&](std::ostream& os) { heuristic::write_trace_csv(os, trace); });

  std::cout << "start r=" << start.r_um << " um theta=" << start.theta_rad << " rad z=" << start.z_um << " um\n"
            << "outcome " << heuristic::to_string(trace.outcome) << " after " << trace.elapsed_s << " s\n";
  if (trace.converged_at_s) std::cout << "converged at " << *trace.converged_at_s << " s\n";
  return trace.outcome == heuristic::Outcome::aborted_no_signal ? kAbort : kOk;
}

int cmd_rl_train(const Common& c) {
  const auto cfg = resolve(c);
  const fs::path dir = c.out.value_or(default_run_dir("rl-train"));
  config::write_config(dir / "config.json", cfg);
  rl::TrainOptions opt;
  opt.out_dir = dir;
  const long long every = std::max(1LL, cfg.sac.total_steps / 20);
  opt.on_log = [&](const rl::TrainLogRow& r) {
    if (r.env_step % every < cfg.sac.log_interval) {
      std::cerr << "step " << r.env_step << "  reward " << r.mean_reward << "  ep_len " << r.mean_ep_len
                << "  alpha " << r.alpha << "\n";
    }
  };
  const auto result = rl::train(cfg.env(), cfg.sac, c.seed, opt);
  std::cout << "episodes " << result.episodes << "\n";
  if (result.best) std::cout << "best validation score " << result.best_score << " (best.ckpt)\n";
  std::cout << "wrote " << dir.string() << "\n";
  return kOk;
}

int cmd_rl_eval(const Common& c, const fs::path& ckpt_path, std::optional<int> trials) {
  const auto cfg = resolve(c);
  const fs::path out = c.out.value_or(default_run_dir("rl-eval") / "trials.csv");
  config::write_config(out.parent_path() / "config.json", cfg);
  const auto ckpt = rl::load_checkpoint(ckpt_path);
  const auto env_cfg = cfg.env();
  if (!(ckpt.scale == env::ObservationScale::from(env_cfg))) {
    throw VersionError("checkpoint normalization constants differ from the configured environment");
  }
  const auto results =
      eval::run_rl_trials(ckpt.agent, env_cfg, trials.value_or(cfg.eval.trials), c.seed, cfg.eval.budget_s, c.jobs);
  write_file(out, [&](std::ostream& os) { eval::write_trials_csv(os, results); });
  std::cout << "auc " << eval::exact_auc(results, cfg.eval.budget_s) << "  median "
            << format_seconds(eval::median_time(results)) << " s\n";
  return kOk;
}

int cmd_roc(const Common& c, const fs::path& in_path, const std::optional<std::string>& policy) {
  const auto cfg = resolve(c);
  const fs::path out = c.out.value_or(default_run_dir("roc") / "curve.csv");
  config::write_config(out.parent_path() / "config.json", cfg);
  std::ifstream in(in_path);
  if (!in) throw ConfigError("cannot open " + in_path.string());
  auto results = eval::read_trials_csv(in);
  if (policy) {
    const auto p = eval::parse_policy(*policy);
    std::erase_if(results, [&](const eval::TrialResult& r) { return r.policy != p; });
  } else if (!results.empty() && std::any_of(results.begin(), results.end(), [&](const eval::TrialResult& r) {
               return r.policy != results.front().policy;
             })) {
    throw ConfigError("trials file mixes policies; select one with --policy");
  }
  const auto curve = eval::roc_curve(results, cfg.eval.n_thresholds, cfg.eval.budget_s);
  write_file(out, [&](std::ostream& os) { eval::write_roc_csv(os, curve); });
  std::cout << "auc " << curve.auc << "\n";
  return kOk;
}

int cmd_campaign(const Common& c, std::optional<int> trials, const std::optional<fs::path>& ckpt_path) {
  const auto cfg = resolve(c);
  const fs::path dir = c.out.value_or(default_run_dir("campaign"));
  config::write_config(dir / "config.json", cfg);
  const auto env_cfg = cfg.env();
  const int n = trials.value_or(cfg.eval.trials);

  rl::AgentCheckpoint ckpt;
  if (ckpt_path) {
    ckpt = rl::load_checkpoint(*ckpt_path);
  } else {
    std::cerr << "no --ckpt given: training an agent first\n";
    rl::TrainOptions opt;
    opt.out_dir = dir / "agent";
    auto trained = rl::train(env_cfg, cfg.sac, c.seed, opt);
    ckpt = trained.best ? std::move(*trained.best) : std::move(trained.final);
  }
  if (!(ckpt.scale == env::ObservationScale::from(env_cfg))) {
    throw VersionError("checkpoint normalization constants differ from the configured environment");
  }

  const auto ha = eval::run_ha_trials(env_cfg, cfg.heuristic, n, c.seed, cfg.eval.budget_s, c.jobs);
  const auto rlr = eval::run_rl_trials(ckpt.agent, env_cfg, n, c.seed, cfg.eval.budget_s, c.jobs);
  const auto report = eval::compare_policies(ha, rlr, cfg.eval.n_thresholds, cfg.eval.budget_s);

  write_file(dir / "trials.csv", [&](std::ostream& os) {
    std::vector<eval::TrialResult> all(ha);
    all.insert(all.end(), rlr.begin(), rlr.end());
    eval::write_trials_csv(os, all);
  });
  write_file(dir / "roc_ha.csv", [&](std::ostream& os) { eval::write_roc_csv(os, report.roc_ha); });
  write_file(dir / "roc_rl.csv", [&](std::ostream& os) { eval::write_roc_csv(os, report.roc_rl); });
  write_file(dir / "report.txt", [&](std::ostream& os) { eval::write_report(os, report); });

  std::cout << "auc_ha " << report.auc_ha << "  auc_rl " << report.auc_rl << "\n"
            << "median_ha " << format_seconds(report.median_ha_s) << " s  median_rl "
            << format_seconds(report.median_rl_s) << " s  win_rate " << report.win_rate << "\n"
            << "wrote " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qalign: SPDC source model and fiber-coupling alignment benchmarks"};
  app.require_subcommand(1);

  Common spdc_c, ha_c, train_c, eval_c, roc_c, camp_c;
  std::optional<fs::path> trace_path, camp_ckpt;
  fs::path eval_ckpt, roc_in;
  std::optional<int> eval_trials, camp_trials;
  std::optional<std::string> roc_policy;

  auto* spdc = app.add_subcommand("spdc-scan", "Temperature sweep, spectra and biphoton wavefunction");
  add_common(spdc, spdc_c);
  spdc->add_option("--out", spdc_c.out, "Output directory");

  auto* ha = app.add_subcommand("ha-run", "One heuristic alignment from a seeded start pose");
  add_common(ha, ha_c);
  ha->add_option("--trace", trace_path, "Trace CSV path");

  auto* train = app.add_subcommand("rl-train", "Train the SAC agent");
  add_common(train, train_c);
  train->add_option("--out", train_c.out, "Checkpoint directory");

  auto* rle = app.add_subcommand("rl-eval", "Evaluate a checkpoint on seeded starts");
  add_common(rle, eval_c);
  rle->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  rle->add_option("--trials", eval_trials, "Number of trials (default: eval.trials)");
  rle->add_option("--out", eval_c.out, "Trials CSV path");

  auto* roc = app.add_subcommand("roc", "Modified ROC curve from a trials CSV");
  add_common(roc, roc_c);
  roc->add_option("--in", roc_in, "Trials CSV")->required()->check(CLI::ExistingFile);
  roc->add_option("--policy", roc_policy, "heuristic or rl (required for mixed files)");
  roc->add_option("--out", roc_c.out, "Curve CSV path");

  auto* camp = app.add_subcommand("campaign", "Paired heuristic vs RL evaluation");
  add_common(camp, camp_c);
  camp->add_option("--trials", camp_trials, "Number of paired trials (default: eval.trials)");
  camp->add_option("--ckpt", camp_ckpt, "Agent checkpoint (trains one when omitted)")->check(CLI::ExistingFile);
  camp->add_option("--out", camp_c.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*spdc) return cmd_spdc_scan(spdc_c);
    if (*ha) return cmd_ha_run(ha_c, trace_path);
    if (*train) return cmd_rl_train(train_c);
    if (*rle) return cmd_rl_eval(eval_c, eval_ckpt, eval_trials);
    if (*roc) return cmd_roc(roc_c, roc_in, roc_policy);
    if (*camp) return cmd_campaign(camp_c, camp_trials, camp_ckpt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const VersionError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
