#include "quadfdi/simulation.hpp"

#include "quadfdi/attack.hpp"
#include "quadfdi/errors.hpp"

namespace quadfdi {

namespace {

constexpr std::uint64_t kCalibrationSeedOffset = 1'000'000;

}  // namespace

NoiseSource::NoiseSource(const ScenarioConfig& cfg, std::uint64_t seed)
    : gps_divisor_(cfg.timing.gps_divisor()),
      process_rng_(seed, Stream::kProcess),
      gps_rng_(seed, Stream::kGps),
      imu_rng_(seed, Stream::kImu),
      process_(Vec12::Zero(), cfg.process_covariance),
      gps_(Vec3::Zero(), cfg.gps.covariance),
      imu_(cfg.imu.bias, cfg.imu.covariance) {}

StepNoise NoiseSource::draw(std::int64_t k) {
  StepNoise n;
  n.imu = imu_(imu_rng_);
  if (sensor_schedule(k, gps_divisor_) == SensorSchedule::kImuAndGps) n.gps = gps_(gps_rng_);
  n.process = process_(process_rng_);
  return n;
}

ClosedLoopModel::ClosedLoopModel(const ScenarioConfig& cfg)
    : cfg_(cfg), gps_divisor_(cfg.timing.gps_divisor()) {
  fusion_.vehicle = cfg.vehicle;
  fusion_.process_covariance = cfg.estimator_process_covariance;
  fusion_.gps = cfg.gps;
  fusion_.imu = cfg.imu;
  fusion_.dt = cfg.dt();
}

StepOutput ClosedLoopModel::step(ClosedLoopState& state, std::int64_t k, const StepNoise& noise,
                                 const Vec3& attack, std::span<const Waypoint> mission) const {
  StepOutput out;
  out.frame.step = k;
  out.frame.imu = sample_imu(state.plant.attitude(), noise.imu);
  if (sensor_schedule(k, gps_divisor_) == SensorSchedule::kImuAndGps) {
    out.frame.gps = inject(sample_gps(state.plant.position(), noise.gps), attack);
  }

  out.fusion = fuse_step(state.estimator, state.command, out.frame, fusion_);
  state.estimator = out.fusion.state;

  auto [ctrl, u] = controller_step(state.controller, state.estimator.mean, mission, cfg_.gains,
                                   cfg_.vehicle, cfg_.dt());
  state.controller = ctrl;
  state.command = u;

  try {
    state.plant = step_discrete(state.plant, u, cfg_.vehicle, cfg_.drag, cfg_.dt(), noise.process);
  } catch (const NonFiniteState&) {
    throw NonFiniteState(k, "plant state became non-finite at step " + std::to_string(k));
  }
  return out;
}

ClosedLoopState initial_closed_loop(const ScenarioConfig& cfg, std::uint64_t seed) {
  ClosedLoopState s;
  s.plant = StateVector::hover_at(cfg.initial_position);
  RngStream init_rng(seed, Stream::kEstimatorInit);
  const GaussianSampler<12> spread(Vec12::Zero(),
                                   Mat12::Identity() * cfg.estimator_initial_spread);
  s.estimator.mean = s.plant.vector() + spread(init_rng);
  s.estimator.covariance = Mat12::Identity() * cfg.estimator_initial_covariance;
  s.estimator.step = -cfg.warmup_steps() - 1;
  s.command = RotorCommand::uniform(cfg.vehicle.hover_thrust() / (4.0 * cfg.vehicle.thrust_coeff));
  return s;
}

namespace {

using WarmupSink = std::function<void(const Verdict&)>;

void require_resolved(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.detector.mode == DetectorMode::kCalibrate) {
    throw ValidationError("detector.mode",
                          "thresholds must be resolved (with_resolved_detector) before simulating");
  }
}

// Warm-up: hold the start position with attacks off.
WarmStart run_warmup(const ScenarioConfig& cfg, std::uint64_t seed, const WarmupSink& sink) {
  const ClosedLoopModel model(cfg);
  WarmStart w{seed, initial_closed_loop(cfg, seed), {cfg.detector.thresholds, {}},
              NoiseSource(cfg, seed)};
  const Waypoint hold{cfg.initial_position, cfg.mission.front().capture_radius};
  for (std::int64_t k = -cfg.warmup_steps(); k < 0; ++k) {
    const StepNoise n = w.noise.draw(k);
    const StepOutput out = model.step(w.state, k, n, Vec3::Zero(), std::span(&hold, 1));
    Verdict v;
    std::tie(w.detector, v) =
        detector_step(w.detector, k, out.fusion.innovation, out.fusion.innovation_cov);
    if (sink) sink(v);
  }
  w.state.controller.waypoint_index = 0;
  return w;
}

RunRecord run_horizon(const ScenarioConfig& cfg, const WarmStart& warm, bool attack_enabled,
                      const StepSink& sink) {
  const ClosedLoopModel model(cfg);
  ClosedLoopState state = warm.state;
  DetectorState detector = warm.detector;
  NoiseSource noise = warm.noise;
  const double dt = cfg.dt();
  const int divisor = model.gps_divisor();

  RunRecord rec;
  rec.seed = warm.seed;
  rec.config_fingerprint = config_fingerprint(cfg);
  rec.attack_enabled = attack_enabled;
  rec.dt = dt;
  rec.gps_divisor = divisor;
  rec.initial = state;
  rec.initial_detector = detector;

  const std::int64_t n_steps = cfg.horizon_steps();
  StepRecord r;
  for (std::int64_t k = 0; k < n_steps; ++k) {
    r.step = k;
    r.state = state.plant.vector();
    r.noise = noise.draw(k);
    r.attack = attack_enabled ? attack_signal(k, cfg.attack, dt, divisor) : Vec3::Zero();
    const StepOutput out = model.step(state, k, r.noise, r.attack, cfg.mission);
    std::tie(detector, r.verdict) =
        detector_step(detector, k, out.fusion.innovation, out.fusion.innovation_cov);

    r.estimate = state.estimator.mean;
    r.position_integral = state.controller.position_integral;
    r.attitude_integral = state.controller.attitude_integral;
    r.waypoint_index = static_cast<std::uint32_t>(state.controller.waypoint_index);
    r.command = state.command.speed_sq;
    r.imu = out.frame.imu;
    r.has_gps = out.frame.gps.has_value();
    r.gps = r.has_gps ? *out.frame.gps : Vec3::Zero();
    r.innovation.setZero();
    r.innovation.head(out.fusion.innovation.size()) = out.fusion.innovation;
    sink(r);
  }
  return rec;
}

RunRecord run_loop(const ScenarioConfig& cfg, std::uint64_t seed, bool attack_enabled,
                   const StepSink& sink, const WarmupSink& warmup_sink) {
  require_resolved(cfg);
  return run_horizon(cfg, run_warmup(cfg, seed, warmup_sink), attack_enabled, sink);
}

}  // namespace

WarmStart warm_start(const ScenarioConfig& cfg, std::uint64_t seed) {
  require_resolved(cfg);
  return run_warmup(cfg, seed, {});
}

RunRecord simulate_from(const ScenarioConfig& cfg, const WarmStart& warm, bool attack_enabled,
                        const StepSink& sink) {
  require_resolved(cfg);
  return run_horizon(cfg, warm, attack_enabled, sink);
}

RunRecord simulate(const ScenarioConfig& cfg, std::uint64_t seed, bool attack_enabled,
                   const StepSink& sink) {
  return run_loop(cfg, seed, attack_enabled, sink, {});
}

RunRecord run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, bool attack_enabled) {
  std::vector<StepRecord> steps;
  steps.reserve(static_cast<std::size_t>(cfg.horizon_steps()));
  RunRecord rec =
      simulate(cfg, seed, attack_enabled, [&](const StepRecord& r) { steps.push_back(r); });
  rec.steps = std::move(steps);
  return rec;
}

ScoreTrace score_trace(const ScenarioConfig& cfg, std::uint64_t seed, double horizon) {
  ScenarioConfig c = cfg;
  c.horizon = horizon;
  c.detector.mode = DetectorMode::kFixed;
  ScoreTrace trace;
  const auto total = static_cast<std::size_t>(c.warmup_steps() + c.horizon_steps());
  trace.chi2.reserve(total);
  trace.dof.reserve(total);
  auto push = [&](const Verdict& v) {
    trace.chi2.push_back(v.chi2);
    trace.dof.push_back(static_cast<std::uint8_t>(v.dof));
  };
  run_loop(c, seed, false, [&](const StepRecord& r) { push(r.verdict); }, push);
  trace.counted_from = static_cast<std::size_t>(c.warmup_steps());
  return trace;
}

CalibrationReport calibrate_scenario(const ScenarioConfig& cfg, double target_pfa, int runs) {
  if (runs < 1) throw ValidationError("detector.calibration_runs", "must be at least 1");
  std::vector<ScoreTrace> traces;
  traces.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    traces.push_back(score_trace(cfg, cfg.seed + kCalibrationSeedOffset + static_cast<std::uint64_t>(i),
                                 cfg.detector.calibration_horizon));
  }
  CalibrationReport report;
  report.runs = runs;
  report.calibration = calibrate_detectors(traces, target_pfa, cfg.detector.thresholds.cusum_drift,
                                           cfg.detector.thresholds.reset_on_alarm);
  double sum[2] = {0.0, 0.0};
  std::size_t count[2] = {0, 0};
  for (const ScoreTrace& t : traces) {
    for (std::size_t i = t.counted_from; i < t.chi2.size(); ++i) {
      const int g = t.dof[i] > 6 ? 1 : 0;
      sum[g] += t.chi2[i];
      ++count[g];
    }
  }
  report.chi2_mean_imu = count[0] ? sum[0] / static_cast<double>(count[0]) : 0.0;
  report.chi2_mean_gps = count[1] ? sum[1] / static_cast<double>(count[1]) : 0.0;
  return report;
}

DetectorConfig resolve_detector(const ScenarioConfig& cfg) {
  if (cfg.detector.mode == DetectorMode::kFixed) return cfg.detector.thresholds;
  return calibrate_scenario(cfg, cfg.detector.target_pfa, cfg.detector.calibration_runs)
      .calibration.config;
}

ScenarioConfig with_resolved_detector(const ScenarioConfig& cfg) {
  ScenarioConfig out = cfg;
  out.detector.thresholds = resolve_detector(cfg);
  out.detector.mode = DetectorMode::kFixed;
  return out;
}

Eigen::Matrix<double, 30, 1> closed_loop_vector(const ClosedLoopState& s) {
  Eigen::Matrix<double, 30, 1> v;
  v << s.plant.vector(), s.estimator.mean, s.controller.position_integral,
      s.controller.attitude_integral;
  return v;
}

}  // namespace quadfdi
