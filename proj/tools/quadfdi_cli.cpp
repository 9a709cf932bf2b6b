#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "quadfdi/analysis.hpp"
#include "quadfdi/config.hpp"
#include "quadfdi/export.hpp"
#include "quadfdi/montecarlo.hpp"
#include "quadfdi/simulation.hpp"

namespace fs = std::filesystem;
using namespace quadfdi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

// Full-scale Monte Carlo: 5000 paired runs at a 0.1% false-alarm target.
constexpr int kFullScaleRuns = 5000;
constexpr double kFullScalePfa = 0.001;

constexpr double kDefaultAlpha = 10.0;  // m, deviation target reported by analyze

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

ScenarioConfig resolved(const ScenarioConfig& cfg) {
  if (cfg.detector.mode == DetectorMode::kCalibrate) {
    std::fprintf(stderr, "calibrating detectors: %d attack-free runs of %.0f s\n",
                 cfg.detector.calibration_runs, cfg.detector.calibration_horizon);
  }
  return with_resolved_detector(cfg);
}

void print_thresholds(const DetectorConfig& d) {
  std::printf("thresholds: chi2 (6 dof) %.4f, chi2 (9 dof) %.4f, cusum %.4f\n",
              d.chi2_threshold_imu, d.chi2_threshold_gps, d.cusum_threshold);
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::uint64_t seed = 1;
  bool no_attack = false;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const ScenarioConfig cfg = resolved(load_config(a.config));
  const fs::path out(a.out);
  ensure_dir(out);

  const bool attack = !a.no_attack;
  const RunRecord run = run_scenario(cfg, a.seed, attack);
  const std::string stem = attack ? "attacked" : "nominal";
  write_run_csv(out / (stem + ".csv"), run);
  write_run_binary(out / (stem + ".bin"), run);
  save_config(cfg, out / "config.ini");

  std::int64_t chi2_alarms = 0, cusum_alarms = 0;
  for (const StepRecord& r : run.steps) {
    chi2_alarms += r.verdict.chi2_alarm;
    cusum_alarms += r.verdict.cusum_alarm;
  }
  const Vec12& last = run.steps.back().state;
  std::printf("%s run, seed %llu, %zu steps\n", stem.c_str(),
              static_cast<unsigned long long>(a.seed), run.steps.size());
  std::printf("final position: %.3f %.3f %.3f m, waypoint index %u\n", last[6], last[7], last[8],
              run.steps.back().waypoint_index);
  std::printf("alarms: chi2 %lld, cusum %lld (%.4f, %.4f per step)\n",
              static_cast<long long>(chi2_alarms), static_cast<long long>(cusum_alarms),
              static_cast<double>(chi2_alarms) / static_cast<double>(run.steps.size()),
              static_cast<double>(cusum_alarms) / static_cast<double>(run.steps.size()));
  std::printf("wrote %s/%s.{csv,bin} and config.ini\n", out.string().c_str(), stem.c_str());
  return kExitOk;
}

// --- montecarlo --------------------------------------------------------------

struct MonteCarloArgs {
  std::string config;
  std::optional<int> runs;
  std::uint64_t base_seed = 1;
  std::string out;
  bool stream = false;
  bool full_scale = false;
  int threads = 0;
};

void print_alarm_summary(const AlarmStats& s) {
  auto line = [](const char* name, const DetectorAlarms& d) {
    std::printf("%-6s p_TD %.5f [%.5f, %.5f]  p_FA %.5f [%.5f, %.5f]  |diff| %.5f\n", name,
                d.true_detection.mean, d.true_detection.ci_low, d.true_detection.ci_high,
                d.false_alarm.mean, d.false_alarm.ci_low, d.false_alarm.ci_high,
                std::abs(d.true_detection.mean - d.false_alarm.mean));
  };
  line("chi2", s.chi2);
  line("cusum", s.cusum);
}

int cmd_montecarlo(const MonteCarloArgs& a) {
  ScenarioConfig cfg = load_config(a.config);
  int runs = a.runs.value_or(a.full_scale ? kFullScaleRuns : 0);
  if (runs < 1) throw ValidationError("runs", "--runs is required unless --full-scale is given");
  if (a.full_scale) {
    cfg.detector.target_pfa = kFullScalePfa;
    // Keep at least 50 / p samples on the sparse 9-dof channel.
    const double gps_rate = 1.0 / cfg.timing.gps_period;
    const double needed = 4.0 * 50.0 / kFullScalePfa / gps_rate / cfg.detector.calibration_horizon;
    cfg.detector.calibration_runs =
        std::max(cfg.detector.calibration_runs, static_cast<int>(std::ceil(needed)));
  }
  cfg = resolved(cfg);
  print_thresholds(cfg.detector.thresholds);

  const fs::path out(a.out);
  ensure_dir(out);
  save_config(cfg, out / "config.ini");

  MonteCarloOptions opt;
  opt.runs = runs;
  opt.base_seed = a.base_seed;
  opt.stream = a.stream;
  opt.threads = a.threads;
  const int report_every = std::max(1, runs / 20);
  opt.progress = [report_every](int done, int total) {
    if (done % report_every == 0 || done == total) {
      std::fprintf(stderr, "\r%d/%d pairs", done, total);
      if (done == total) std::fputc('\n', stderr);
    }
  };
  const MonteCarloResult r = run_monte_carlo(cfg, opt);

  const AlarmStats stats = alarm_stats(r.alarms, r.dt);
  write_alarm_csv(out / "alarm_rates.csv", stats);
  write_deviation_csv(out / "deviation.csv", r.deviation, r.dt);
  {
    std::FILE* f = std::fopen((out / "failures.csv").string().c_str(), "w");
    if (!f) throw IoError((out / "failures.csv").string(), "cannot open for writing");
    std::fputs("seed,run,step,message\n", f);
    for (const RunFailure& fl : r.failures) {
      std::string msg = fl.message;
      for (char& c : msg) {
        if (c == ',' || c == '\n') c = ' ';
      }
      std::fprintf(f, "%llu,%s,%s,%s\n", static_cast<unsigned long long>(fl.seed),
                   fl.attacked ? "attacked" : "nominal",
                   fl.step ? std::to_string(*fl.step).c_str() : "", msg.c_str());
    }
    std::fclose(f);
  }
  if (!a.stream) {
    const fs::path dir = out / "runs";
    ensure_dir(dir);
    for (const PairedRun& p : r.records) {
      const std::string s = std::to_string(p.attacked.seed);
      write_run_csv(dir / ("seed_" + s + "_attacked.csv"), p.attacked);
      write_run_csv(dir / ("seed_" + s + "_nominal.csv"), p.nominal);
    }
  }

  std::printf("%d pairs, %d completed, %zu failed\n", r.runs, r.completed(), r.failures.size());
  if (r.completed() > 0) {
    print_alarm_summary(stats);
    const std::size_t last = r.deviation.steps() - 1;
    std::printf("deviation at t=%.1f s: mean %.3f m (min %.3f, max %.3f)\n",
                static_cast<double>(last) * r.dt, r.deviation.mean(last), r.deviation.min(last),
                r.deviation.max(last));
  }
  for (const RunFailure& fl : r.failures) {
    std::fprintf(stderr, "run %llu (%s) failed: %s\n", static_cast<unsigned long long>(fl.seed),
                 fl.attacked ? "attacked" : "nominal", fl.message.c_str());
  }
  return r.failures.empty() ? kExitOk : kExitRuntime;
}

// --- calibrate ---------------------------------------------------------------

struct CalibrateArgs {
  std::string config;
  double target_pfa = 0.01;
  long long samples = 0;
};

int cmd_calibrate(const CalibrateArgs& a) {
  ScenarioConfig cfg = load_config(a.config);
  cfg.detector.target_pfa = a.target_pfa;
  cfg.detector.mode = DetectorMode::kCalibrate;
  // Samples are attack-free steps; they are split into flights of the
  // configured calibration length.
  const double per_run = std::round(cfg.detector.calibration_horizon / cfg.dt());
  const int runs = static_cast<int>(std::ceil(static_cast<double>(a.samples) / per_run));
  cfg.detector.calibration_runs = runs;
  cfg.validate();
  std::fprintf(stderr, "calibrating: %d attack-free runs of %.0f s\n", runs,
               cfg.detector.calibration_horizon);
  const CalibrationReport rep = calibrate_scenario(cfg, a.target_pfa, runs);

  auto row = [](const char* name, const Calibration& c) {
    std::printf("%-12s threshold %10.4f  achieved %.5f  95%% CI [%.5f, %.5f]  samples %zu\n", name,
                c.threshold, c.achieved_rate, c.ci_low, c.ci_high, c.samples);
  };
  std::printf("target p_FA %.5f over %d runs\n", a.target_pfa, rep.runs);
  row("chi2 6 dof", rep.calibration.chi2_imu);
  row("chi2 9 dof", rep.calibration.chi2_gps);
  row("cusum", rep.calibration.cusum);
  std::printf("chi2 mean: 6 dof %.4f, 9 dof %.4f\n", rep.chi2_mean_imu, rep.chi2_mean_gps);
  std::printf("\n[detector]\nmode = fixed\nchi2_threshold_imu = %.17g\nchi2_threshold_gps = %.17g\n"
              "cusum_threshold = %.17g\n",
              rep.calibration.config.chi2_threshold_imu, rep.calibration.config.chi2_threshold_gps,
              rep.calibration.config.cusum_threshold);
  return kExitOk;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  std::string in;
  bool ies = false;
  bool bound = false;
  bool replay_check = false;
  double alpha = kDefaultAlpha;
  int lipschitz_samples = 10000;
};

Vec3 ramp_slope(const ScenarioConfig& cfg) {
  if (const auto* r = std::get_if<RampAttack>(&cfg.attack.signal)) return r->slope;
  return Vec3::Zero();
}

int cmd_analyze(const AnalyzeArgs& a) {
  const fs::path in(a.in);
  const ScenarioConfig cfg = load_config(in / "config.ini");
  int status = kExitOk;

  std::optional<RunRecord> attacked, nominal;
  if (fs::exists(in / "attacked.bin")) attacked = read_run_binary(in / "attacked.bin");
  if (fs::exists(in / "nominal.bin")) nominal = read_run_binary(in / "nominal.bin");

  std::optional<DeviationSeries> dev;
  if (attacked && nominal) {
    const double alphas[] = {a.alpha};
    dev = deviation_series(*attacked, *nominal, alphas);
    write_deviation_csv(in / "deviation.csv", *dev, attacked->dt);
    const std::size_t n = dev->deviation.size();
    const std::size_t k200 = static_cast<std::size_t>(std::llround(200.0 / attacked->dt));
    std::printf("paired runs, seed %llu, %zu steps\n",
                static_cast<unsigned long long>(attacked->seed), n);
    if (k200 < n) std::printf("deviation at t=200 s: %.3f m\n", dev->deviation[k200]);
    std::printf("deviation at t=%.1f s: %.3f m\n", static_cast<double>(n - 1) * attacked->dt,
                dev->deviation.back());
    if (dev->first_exceeding[0]) {
      std::printf("first step with deviation >= %.1f m: k=%lld (t=%.3f s)\n", a.alpha,
                  static_cast<long long>(*dev->first_exceeding[0]),
                  static_cast<double>(*dev->first_exceeding[0]) * attacked->dt);
    } else {
      std::printf("deviation never reaches %.1f m\n", a.alpha);
    }
    const RunRecord runs_a[] = {*attacked};
    const RunRecord runs_n[] = {*nominal};
    print_alarm_summary(alarm_stats(runs_a, runs_n));
  } else if (fs::exists(in / "alarm_rates.csv")) {
    const CsvTable t = read_csv(in / "alarm_rates.csv");
    for (const char* d : {"chi2", "cusum"}) {
      double td = 0, fa = 0;
      const auto vtd = t.values(std::string(d) + "_td");
      const auto vfa = t.values(std::string(d) + "_fa");
      for (std::size_t i = 0; i < vtd.size(); ++i) td += vtd[i], fa += vfa[i];
      const double n = std::max<double>(1.0, static_cast<double>(vtd.size()));
      std::printf("%-6s mean p_TD %.5f  mean p_FA %.5f  |diff| %.5f\n", d, td / n, fa / n,
                  std::abs(td - fa) / n);
    }
  } else if (!a.ies && !a.bound && !a.replay_check) {
    throw ValidationError("--in", "no attacked.bin/nominal.bin pair or alarm_rates.csv in " +
                                      in.string());
  }

  std::optional<IesFit> fit;
  if (a.ies || a.bound) {
    try {
      fit = estimate_ies_constants(closed_loop_gap_traces(cfg, IesOptions{}));
    } catch (const NoDecay& e) {
      std::printf("IES: no decay (lambda %.6f per step, R^2 %.3f); bound not available\n",
                  e.fit.lambda, e.fit.r_squared);
    }
    if (fit) {
      std::printf("IES: kappa %.4f, lambda %.8f per step (%.4f per s), R^2 %.4f over %.1f s, "
                  "%d pairs\n",
                  fit->kappa, fit->lambda, std::pow(fit->lambda, 1.0 / cfg.dt()), fit->r_squared,
                  fit->horizon * cfg.dt(), fit->pairs);
    }
  }

  if (a.bound && fit) {
    const ClosedLoopLipschitz L = closed_loop_lipschitz(cfg, a.lipschitz_samples, 1);
    const Vec3 c = ramp_slope(cfg);
    std::printf("Lipschitz (sampled lower bounds): L_h %.4f, L_g %.4f, L_fc %.4f\n", L.lh, L.lg,
                L.lfc);
    const StealthBoundResult b =
        stealth_bound(fit->kappa, fit->lambda, L.lh, L.lg, L.lfc, cfg.dt(),
                      cfg.timing.gps_divisor(), cfg.imu.covariance, cfg.gps.covariance, c);
    std::printf("stealth bound: b_eps %.6g, eps %.6g (||C|| = %.4f m/s)\n", b.b_epsilon, b.epsilon,
                c.norm());
    if (c.norm() > 0) {
      const auto k = min_effective_step(a.alpha, c.norm(), fit->kappa, L.lg, L.lfc, cfg.dt());
      const auto kp = min_effective_step_printed(a.alpha, c.norm(), fit->kappa, L.lg, L.lfc, cfg.dt());
      std::printf("min effective step for alpha %.1f m: k=%lld (t=%.3f s); printed variant k=%lld\n",
                  a.alpha, static_cast<long long>(k), static_cast<double>(k + 1) * cfg.dt(),
                  static_cast<long long>(kp));
      if (dev) {
        const double gap = c.norm() * std::sqrt(1.0 + cfg.dt() * cfg.dt());
        std::size_t violations = 0;
        for (std::size_t i = 0; i < dev->deviation.size(); ++i) {
          const double lb = deviation_lower_bound(static_cast<std::int64_t>(i), c.norm(), cfg.dt(),
                                                  fit->kappa, gap);
          if (dev->deviation[i] < lb) ++violations;
        }
        std::printf("deviation lower bound violated at %zu of %zu steps\n", violations,
                    dev->deviation.size());
      }
    }
  }

  if (a.replay_check) {
    if (!attacked) throw ValidationError("--replay-check", "needs attacked.bin in " + in.string());
    try {
      const double err = fake_replay(cfg, *attacked);
      std::printf("fake-state replay: max discrepancy %.3g over %zu steps\n", err,
                  attacked->steps.size());
    } catch (const ReplayMismatch& e) {
      std::printf("fake-state replay FAILED at step %lld: discrepancy %.3g (%s)\n",
                  static_cast<long long>(e.step()), e.discrepancy(), e.what());
      status = kExitRuntime;
    }
  }
  return status;
}

// --- plot --------------------------------------------------------------------

int cmd_plot(const std::string& in_dir, const std::string& out_dir) {
  const fs::path in(in_dir), out(out_dir);
  int written = 0;
  ensure_dir(out);
  if (fs::exists(in / "attacked.bin") && fs::exists(in / "nominal.bin")) {
    write_svg(out / "trajectory.svg",
              trajectory_plot(read_run_binary(in / "nominal.bin"), read_run_binary(in / "attacked.bin")));
    ++written;
  }
  if (fs::exists(in / "alarm_rates.csv")) {
    const CsvTable t = read_csv(in / "alarm_rates.csv");
    if (!t.rows.empty()) {
      write_svg(out / "alarm_chi2.svg", alarm_rate_plot(t, "chi2"));
      write_svg(out / "alarm_cusum.svg", alarm_rate_plot(t, "cusum"));
      written += 2;
    }
  }
  if (fs::exists(in / "deviation.csv")) {
    const CsvTable t = read_csv(in / "deviation.csv");
    if (!t.rows.empty()) {
      write_svg(out / "deviation.svg", deviation_plot(t));
      ++written;
    }
  }
  if (written == 0) {
    throw ValidationError("--in", "nothing to plot in " + in.string() +
                                      " (expected run records or aggregate CSVs)");
  }
  std::printf("wrote %d plot(s) to %s\n", written, out.string().c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop quadcopter simulator with GPS false-data injection"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run one flight and record it");
  s->add_option("--config", sim.config, "Scenario file")->required()->check(CLI::ExistingFile);
  s->add_option("--seed", sim.seed, "Run seed")->required();
  s->add_flag("--no-attack", sim.no_attack, "Gate the injection off");
  s->add_option("--out", sim.out, "Output directory")->required();

  MonteCarloArgs mc;
  auto* m = app.add_subcommand("montecarlo", "Paired attacked/nominal runs over many seeds");
  m->add_option("--config", mc.config, "Scenario file")->required()->check(CLI::ExistingFile);
  m->add_option("--runs", mc.runs, "Number of paired runs")->check(CLI::PositiveNumber);
  m->add_option("--base-seed", mc.base_seed, "Run i uses base-seed + i")->required();
  m->add_option("--out", mc.out, "Output directory")->required();
  m->add_flag("--stream", mc.stream, "Keep only aggregates in memory");
  m->add_flag("--full-scale", mc.full_scale,
              "5000 runs (unless --runs) at a 0.001 false-alarm target");
  m->add_option("--threads", mc.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Calibrate detector thresholds on attack-free runs");
  c->add_option("--config", cal.config, "Scenario file")->required()->check(CLI::ExistingFile);
  c->add_option("--target-pfa", cal.target_pfa, "Per-step false-alarm target")
      ->required()
      ->check(CLI::Range(1e-9, 0.5));
  c->add_option("--samples", cal.samples, "Attack-free steps to collect")
      ->required()
      ->check(CLI::PositiveNumber);

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Deviation, alarm and stability analysis of a run directory");
  a->add_option("--in", an.in, "Directory written by simulate or montecarlo")
      ->required()
      ->check(CLI::ExistingDirectory);
  a->add_flag("--ies", an.ies, "Fit incremental-stability constants");
  a->add_flag("--bound", an.bound, "Stealthiness bound and minimum effective time");
  a->add_flag("--replay-check", an.replay_check, "Verify the fake-state replay on attacked.bin");
  a->add_option("--alpha", an.alpha, "Deviation target in metres")->check(CLI::PositiveNumber);
  a->add_option("--lipschitz-samples", an.lipschitz_samples, "Sample pairs per Lipschitz estimate")
      ->check(CLI::Range(10000, 100000000));

  std::string plot_in, plot_out;
  auto* p = app.add_subcommand("plot", "Render SVG plots from a run directory");
  p->add_option("--in", plot_in, "Input directory")->required()->check(CLI::ExistingDirectory);
  p->add_option("--out", plot_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*m) return cmd_montecarlo(mc);
    if (*c) return cmd_calibrate(cal);
    if (*a) return cmd_analyze(an);
    if (*p) return cmd_plot(plot_in, plot_out);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}
