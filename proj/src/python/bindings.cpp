#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qalign/config/run_config.hpp"
#include "qalign/errors.hpp"
#include "qalign/eval/campaign.hpp"
#include "qalign/eval/roc.hpp"
#include "qalign/heuristic/aligner.hpp"
#include "qalign/heuristic/w_test.hpp"
#include "qalign/rl/checkpoint.hpp"
#include "qalign/rl/trainer.hpp"
#include "qalign/spdc/phase_matching.hpp"
#include "qalign/spdc/sellmeier.hpp"

namespace py = pybind11;
using namespace qalign;

namespace {

using Overrides = std::vector<std::string>;

config::RunConfig make_config(const Overrides& overrides) {
  return config::resolve(std::nullopt, overrides, {});
}

py::dict pose_dict(const env::Pose& p) {
  py::dict d;
  d["r_um"] = p.r_um;
  d["theta_rad"] = p.theta_rad;
  d["z_um"] = p.z_um;
  return d;
}

py::dict trial_dict(const eval::TrialResult& r) {
  py::dict d;
  d["trial_id"] = r.trial_id;
  d["policy"] = eval::to_string(r.policy);
  d["seed"] = r.seed;
  d["start"] = pose_dict(r.start);
  d["converged"] = r.converged;
  d["time_s"] = r.time_s ? py::cast(*r.time_s) : py::none();
  return d;
}

py::list trial_list(const std::vector<eval::TrialResult>& rs) {
  py::list out;
  for (const auto& r : rs) out.append(trial_dict(r));
  return out;
}

// None marks a trial that never converged.
std::vector<eval::TrialResult> from_times(const std::vector<std::optional<double>>& times) {
  std::vector<eval::TrialResult> out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    eval::TrialResult r;
    r.trial_id = static_cast<long long>(i);
    r.converged = times[i].has_value();
    r.time_s = times[i];
    out.push_back(r);
  }
  return out;
}

class PyEnv {
 public:
  PyEnv(std::uint64_t seed, const Overrides& overrides) : env_(make_config(overrides).env(), seed) {}

  std::vector<double> reset() { return env_.reset(); }
  std::vector<double> reset_to(double r, double theta, double z) { return env_.reset_to(env::Pose{r, theta, z}); }

  py::tuple step(double d_r, double d_theta, double d_z) {
    const auto res = env_.step(env::StepAction{d_r, d_theta, d_z});
    py::dict info;
    info["success"] = res.info.success;
    info["truncated"] = res.info.truncated;
    info["counts"] = res.info.measurement.counts;
    info["rate_cps"] = res.info.measurement.rate_cps;
    info["pose"] = pose_dict(res.info.pose);
    info["delta_c"] = res.info.delta_c;
    info["elapsed_s"] = res.info.elapsed_s;
    info["step"] = res.info.step;
    return py::make_tuple(res.observation, res.reward, res.done, info);
  }

  py::dict pose() const { return pose_dict(env_.pose()); }
  int observation_dim() const { return env_.observation_dim(); }
  double elapsed_s() const { return env_.elapsed_s(); }

 private:
  env::AlignmentEnv env_;
};

py::dict heuristic_run(std::uint64_t seed, const Overrides& overrides) {
  const auto cfg = make_config(overrides);
  const auto env_cfg = cfg.env();
  const auto ts = eval::trial_seed(seed, 0);
  const auto start = eval::trial_start_pose(env_cfg, ts);
  env::CouplingStage stage(env_cfg.coupling, derive_seed(ts, 1), start);
  const auto trace = heuristic::run_alignment(stage, cfg.heuristic, env_cfg.c_max());
  py::list events;
  for (const auto& e : trace.events) {
    py::dict d;
    d["t_s"] = e.t_s;
    d["pose"] = pose_dict(e.pose);
    d["counts"] = e.record.counts;
    d["int_time_s"] = e.record.integration_time_s;
    d["W"] = e.w ? py::cast(*e.w) : py::none();
    d["decision"] = e.decision;
    d["phase"] = e.phase;
    events.append(d);
  }
  py::dict out;
  out["start"] = pose_dict(start);
  out["outcome"] = heuristic::to_string(trace.outcome);
  out["elapsed_s"] = trace.elapsed_s;
  out["converged_at_s"] = trace.converged_at_s ? py::cast(*trace.converged_at_s) : py::none();
  out["final_pose"] = pose_dict(trace.final_pose);
  out["events"] = events;
  return out;
}

}  // namespace

PYBIND11_MODULE(_qalign, m) {
  m.doc() = "SPDC source model, coupling environment, heuristic and SAC aligners, ROC evaluation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<VersionError>(m, "VersionError", PyExc_RuntimeError);
  py::register_exception<PairingError>(m, "PairingError", PyExc_ValueError);

  m.def(
      "resolved_config", [](const Overrides& o) { return config::to_json(make_config(o)).dump(); },
      py::arg("overrides") = Overrides{}, "Defaults plus block.key=value overrides, as a JSON string.");

  m.def("refractive_index", &spdc::refractive_index, py::arg("wavelength_nm"), py::arg("temperature_c"));
  m.def(
      "optimal_temperature", [](const Overrides& o) { return spdc::optimal_temperature(make_config(o).crystal); },
      py::arg("overrides") = Overrides{});
  m.def(
      "temperature_sweep",
      [](const Overrides& o) {
        const auto c = make_config(o);
        py::list rows;
        for (const auto& r : spdc::temperature_sweep(c.crystal, c.sweep.t_min_c, c.sweep.t_max_c,
                                                     std::size_t(c.sweep.steps), std::size_t(c.sweep.grid_points))) {
          py::dict d;
          d["temperature_c"] = r.temperature_c;
          d["error"] = r.error;
          if (r.phase_match) {
            d["signal_nm"] = r.phase_match->signal_wavelength_nm;
            d["idler_nm"] = r.phase_match->idler_wavelength_nm;
          }
          if (r.spectrum) {
            d["mean_nm"] = r.spectrum->mean_wavelength_nm;
            d["fwhm_nm"] = r.spectrum->fwhm_nm;
            d["brightness_rel"] = r.spectrum->brightness_rel;
          }
          rows.append(d);
        }
        return rows;
      },
      py::arg("overrides") = Overrides{});
  m.def(
      "biphoton_wavefunction",
      [](const Overrides& o) {
        const auto c = make_config(o);
        const auto wf = spdc::biphoton_wavefunction(c.crystal, std::size_t(c.sweep.grid_points));
        return py::make_tuple(wf.signal_grid_nm, wf.amplitude_real, wf.amplitude_imag);
      },
      py::arg("overrides") = Overrides{}, "(lambda_nm, re_psi, im_psi)");

  m.def(
      "true_rate",
      [](double x, double y, double z, const Overrides& o) { return env::true_rate(make_config(o).coupling, x, y, z); },
      py::arg("x_um"), py::arg("y_um"), py::arg("z_um"), py::arg("overrides") = Overrides{});

  py::class_<PyEnv>(m, "AlignmentEnv")
      .def(py::init<std::uint64_t, const Overrides&>(), py::arg("seed"), py::arg("overrides") = Overrides{})
      .def("reset", &PyEnv::reset)
      .def("reset_to", &PyEnv::reset_to, py::arg("r_um"), py::arg("theta_rad"), py::arg("z_um"))
      .def("step", &PyEnv::step, py::arg("d_r"), py::arg("d_theta"), py::arg("d_z"),
           "Returns (observation, reward, done, info).")
      .def_property_readonly("pose", &PyEnv::pose)
      .def_property_readonly("observation_dim", &PyEnv::observation_dim)
      .def_property_readonly("elapsed_s", &PyEnv::elapsed_s);

  m.def(
      "w_statistic",
      [](std::int64_t n1, double t1, std::int64_t n0, double t0) {
        return heuristic::w_statistic(env::MeasurementRecord::from_counts(n1, t1),
                                      env::MeasurementRecord::from_counts(n0, t0));
      },
      py::arg("counts"), py::arg("time_s"), py::arg("prev_counts"), py::arg("prev_time_s"));
  m.def("decision_threshold", &heuristic::decision_threshold, py::arg("confidence"));
  m.def("run_heuristic", &heuristic_run, py::arg("seed"), py::arg("overrides") = Overrides{},
        "One heuristic alignment from the seeded start pose, with its full trace.");
  m.def(
      "run_heuristic_trials",
      [](int n, std::uint64_t seed, const Overrides& o, int jobs) {
        const auto c = make_config(o);
        std::vector<eval::TrialResult> rs;
        {
          py::gil_scoped_release release;
          rs = eval::run_ha_trials(c.env(), c.heuristic, n, seed, c.eval.budget_s, jobs);
        }
        return trial_list(rs);
      },
      py::arg("n"), py::arg("seed"), py::arg("overrides") = Overrides{}, py::arg("jobs") = 1);
  m.def(
      "evaluate_checkpoint",
      [](const std::filesystem::path& path, int n, std::uint64_t seed, const Overrides& o, int jobs) {
        const auto c = make_config(o);
        const auto ckpt = rl::load_checkpoint(path);
        if (!(ckpt.scale == env::ObservationScale::from(c.env()))) {
          throw VersionError("checkpoint normalization constants differ from the configured environment");
        }
        std::vector<eval::TrialResult> rs;
        {
          py::gil_scoped_release release;
          rs = eval::run_rl_trials(ckpt.agent, c.env(), n, seed, c.eval.budget_s, jobs);
        }
        return trial_list(rs);
      },
      py::arg("path"), py::arg("n"), py::arg("seed"), py::arg("overrides") = Overrides{}, py::arg("jobs") = 1);
  m.def(
      "train",
      [](const std::filesystem::path& out_dir, std::uint64_t seed, const Overrides& o) {
        const auto c = make_config(o);
        rl::TrainOptions opt;
        opt.out_dir = out_dir;
        py::gil_scoped_release release;
        return rl::train(c.env(), c.sac, seed, opt).best_score;
      },
      py::arg("out_dir"), py::arg("seed"), py::arg("overrides") = Overrides{},
      "Trains an agent, writing checkpoints and train_log.csv; returns the best validation score.");

  m.def(
      "exact_auc",
      [](const std::vector<std::optional<double>>& times, double horizon) {
        return eval::exact_auc(from_times(times), horizon);
      },
      py::arg("times"), py::arg("horizon_s") = eval::kRocHorizonS, "Convergence times, None for failures.");
  m.def(
      "roc_curve",
      [](const std::vector<std::optional<double>>& times, int n, double horizon) {
        const auto c = eval::roc_curve(from_times(times), n, horizon);
        return py::make_tuple(c.thresholds_s, c.accuracy, c.auc);
      },
      py::arg("times"), py::arg("n_thresholds"), py::arg("horizon_s") = eval::kRocHorizonS,
      "(thresholds_s, accuracy, auc)");
}
