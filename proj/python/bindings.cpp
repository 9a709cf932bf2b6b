#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <limits>

#include "quadfdi/analysis.hpp"
#include "quadfdi/config.hpp"
#include "quadfdi/errors.hpp"
#include "quadfdi/montecarlo.hpp"
#include "quadfdi/simulation.hpp"

namespace py = pybind11;
using namespace quadfdi;

namespace {

using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

py::dict run_to_dict(const RunRecord& run) {
  const auto n = static_cast<Eigen::Index>(run.steps.size());
  Rows state(n, 12), estimate(n, 12), gps(n, 3), attack(n, 3);
  Eigen::VectorXd t(n), chi2(n), cusum(n);
  Eigen::VectorXi dof(n);
  Eigen::Matrix<bool, Eigen::Dynamic, 1> chi2_alarm(n), cusum_alarm(n);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index i = 0; i < n; ++i) {
    const StepRecord& r = run.steps[static_cast<std::size_t>(i)];
    t(i) = static_cast<double>(r.step) * run.dt;
    state.row(i) = r.state.transpose();
    estimate.row(i) = r.estimate.transpose();
    gps.row(i) = r.has_gps ? Eigen::RowVector3d(r.gps.transpose()) : Eigen::RowVector3d::Constant(nan);
    attack.row(i) = r.attack.transpose();
    chi2(i) = r.verdict.chi2;
    cusum(i) = r.verdict.cusum;
    dof(i) = r.verdict.dof;
    chi2_alarm(i) = r.verdict.chi2_alarm;
    cusum_alarm(i) = r.verdict.cusum_alarm;
  }
  py::dict d;
  d["seed"] = run.seed;
  d["attack_enabled"] = run.attack_enabled;
  d["dt"] = run.dt;
  d["t"] = t;
  d["state"] = state;
  d["estimate"] = estimate;
  d["gps"] = gps;
  d["attack"] = attack;
  d["chi2"] = chi2;
  d["cusum"] = cusum;
  d["dof"] = dof;
  d["chi2_alarm"] = chi2_alarm;
  d["cusum_alarm"] = cusum_alarm;
  return d;
}

Eigen::VectorXd to_numpy(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

py::dict curve_dict(const AlarmCurve& c) {
  py::dict d;
  d["rate"] = to_numpy(c.rate);
  d["mean"] = c.mean;
  d["ci_low"] = c.ci_low;
  d["ci_high"] = c.ci_high;
  return d;
}

py::dict detector_dict(const DetectorAlarms& a) {
  py::dict d;
  d["true_detection"] = curve_dict(a.true_detection);
  d["false_alarm"] = curve_dict(a.false_alarm);
  return d;
}

Vec3 ramp_slope(const ScenarioConfig& c) {
  if (const auto* r = std::get_if<RampAttack>(&c.attack.signal)) return r->slope;
  return Vec3::Zero();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Quadcopter GPS false-data-injection simulator";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<NonFiniteState>(m, "NonFiniteState", base.ptr());
  py::register_exception<ReplayMismatch>(m, "ReplayMismatch", base.ptr());
  py::register_exception<MismatchedRuns>(m, "MismatchedRuns", base.ptr());
  py::register_exception<DivergentBound>(m, "DivergentBound", base.ptr());
  py::register_exception<InsufficientSamples>(m, "InsufficientSamples", base.ptr());
  py::register_exception<NoDecay>(m, "NoDecay", base.ptr());

  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_static("load", &load_config, py::arg("path"))
      .def_static("parse", &parse_config, py::arg("text"))
      .def("emit", &emit_config)
      .def("save", [](const ScenarioConfig& c, const std::filesystem::path& p) { save_config(c, p); })
      .def("validate", &ScenarioConfig::validate)
      .def("resolved", &with_resolved_detector,
           "Copy with detector thresholds fixed, calibrating first if needed.")
      .def("fingerprint", &config_fingerprint)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def_readwrite("horizon", &ScenarioConfig::horizon)
      .def_readwrite("warmup", &ScenarioConfig::warmup)
      .def_property_readonly("dt", &ScenarioConfig::dt)
      .def_property_readonly("horizon_steps", &ScenarioConfig::horizon_steps)
      .def_property(
          "drag_enabled", [](const ScenarioConfig& c) { return c.drag.enabled; },
          [](ScenarioConfig& c, bool v) { c.drag.enabled = v; })
      .def_property(
          "attack_enabled", [](const ScenarioConfig& c) { return c.attack.enabled; },
          [](ScenarioConfig& c, bool v) { c.attack.enabled = v; })
      .def_property(
          "attack_start_step", [](const ScenarioConfig& c) { return c.attack.start_step; },
          [](ScenarioConfig& c, std::int64_t k) { c.attack.start_step = k; })
      .def_property("ramp_slope", &ramp_slope,
                    [](ScenarioConfig& c, const Vec3& s) { c.attack.signal = RampAttack{s}; })
      .def("set_bias_attack",
           [](ScenarioConfig& c, const Vec3& offset) { c.attack.signal = BiasAttack{offset}; })
      .def_property(
          "fixed_thresholds",
          [](const ScenarioConfig& c) { return c.detector.mode == DetectorMode::kFixed; },
          [](ScenarioConfig& c, bool v) {
            c.detector.mode = v ? DetectorMode::kFixed : DetectorMode::kCalibrate;
          })
      .def_property(
          "target_pfa", [](const ScenarioConfig& c) { return c.detector.target_pfa; },
          [](ScenarioConfig& c, double p) { c.detector.target_pfa = p; })
      .def_property(
          "calibration_runs", [](const ScenarioConfig& c) { return c.detector.calibration_runs; },
          [](ScenarioConfig& c, int n) { c.detector.calibration_runs = n; })
      .def_property_readonly("thresholds", [](const ScenarioConfig& c) {
        py::dict d;
        d["chi2_imu"] = c.detector.thresholds.chi2_threshold_imu;
        d["chi2_gps"] = c.detector.thresholds.chi2_threshold_gps;
        d["cusum"] = c.detector.thresholds.cusum_threshold;
        return d;
      })
      .def("__eq__", [](const ScenarioConfig& a, const ScenarioConfig& b) { return a == b; });

  m.def(
      "run_scenario",
      [](const ScenarioConfig& cfg, std::uint64_t seed, bool attack) {
        RunRecord run;
        {
          py::gil_scoped_release release;
          run = run_scenario(cfg, seed, attack);
        }
        return run_to_dict(run);
      },
      py::arg("config"), py::arg("seed"), py::arg("attack") = true,
      "One closed-loop run as a dict of numpy arrays. Thresholds must be fixed.");

  m.def(
      "deviation",
      [](const ScenarioConfig& cfg, std::uint64_t seed) {
        std::vector<double> d;
        {
          py::gil_scoped_release release;
          d = deviation_series(run_scenario(cfg, seed, true), run_scenario(cfg, seed, false))
                  .deviation;
        }
        return to_numpy(d);
      },
      py::arg("config"), py::arg("seed"), "||p^a_k - p_k|| for one paired run.");

  m.def(
      "fake_replay",
      [](const ScenarioConfig& cfg, std::uint64_t seed) {
        py::gil_scoped_release release;
        return fake_replay(cfg, run_scenario(cfg, seed, true));
      },
      py::arg("config"), py::arg("seed"),
      "Largest discrepancy between the attacked run and its fake-state replay.");

  m.def(
      "stealth_bound",
      [](double kappa, double lambda, double lh, double lg, double lfc, double dt, int divisor,
         const Eigen::MatrixXd& imu_cov, const Eigen::MatrixXd& gps_cov, const Vec3& c) {
        const StealthBoundResult r =
            stealth_bound(kappa, lambda, lh, lg, lfc, dt, divisor, imu_cov, gps_cov, c);
        py::dict d;
        d["b_epsilon"] = r.b_epsilon;
        d["epsilon"] = r.epsilon;
        d["imu_information"] = r.imu_information;
        d["gps_information"] = r.gps_information;
        return d;
      },
      py::arg("kappa"), py::arg("lam"), py::arg("lh"), py::arg("lg"), py::arg("lfc"),
      py::arg("dt"), py::arg("gps_divisor"), py::arg("imu_covariance"),
      py::arg("gps_covariance"), py::arg("slope"));

  m.def("min_effective_step", &min_effective_step, py::arg("alpha"), py::arg("c_norm"),
        py::arg("kappa"), py::arg("lg"), py::arg("lfc"), py::arg("dt"));

  m.def(
      "ies_fit",
      [](const ScenarioConfig& cfg, int pairs, double horizon, std::uint64_t seed) {
        IesOptions opt;
        opt.pairs = pairs;
        opt.horizon = horizon;
        opt.seed = seed;
        IesFit fit;
        {
          py::gil_scoped_release release;
          fit = estimate_ies_constants(closed_loop_gap_traces(cfg, opt));
        }
        py::dict d;
        d["kappa"] = fit.kappa;
        d["lam"] = fit.lambda;
        d["r_squared"] = fit.r_squared;
        d["pairs"] = fit.pairs;
        return d;
      },
      py::arg("config"), py::arg("pairs") = 40, py::arg("horizon") = 5.0, py::arg("seed") = 1,
      "Closed-loop incremental-stability constants, lambda per step.");

  m.def(
      "monte_carlo",
      [](const ScenarioConfig& cfg, int runs, std::uint64_t base_seed, int threads) {
        MonteCarloOptions opt;
        opt.runs = runs;
        opt.base_seed = base_seed;
        opt.threads = threads;
        MonteCarloResult mc;
        {
          py::gil_scoped_release release;
          mc = run_monte_carlo(cfg, opt);
        }
        const AlarmStats s = alarm_stats(mc.alarms, mc.dt);
        std::vector<double> mean(mc.deviation.steps());
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] = mc.deviation.mean(k);
        py::dict d;
        d["runs"] = mc.runs;
        d["completed"] = mc.completed();
        d["chi2"] = detector_dict(s.chi2);
        d["cusum"] = detector_dict(s.cusum);
        d["deviation_mean"] = to_numpy(mean);
        return d;
      },
      py::arg("config"), py::arg("runs"), py::arg("base_seed") = 1, py::arg("threads") = 0,
      "Paired attacked/nominal runs aggregated into alarm rates and mean deviation.");
}
