#include "quadfdi/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "quadfdi/random.hpp"
#include "quadfdi/stats.hpp"

namespace quadfdi {

namespace {

double max_inverse_eigenvalue(const Eigen::Ref<const Eigen::MatrixXd>& cov, const char* name) {
  validate_psd(cov, name);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(smallest > 0.0)) throw SingularCovariance(std::string(name) + ": must be positive definite");
  return 1.0 / smallest;
}

std::int64_t ceil_to_step(double value) {
  return static_cast<std::int64_t>(std::ceil(value - 1e-9 * std::max(1.0, std::abs(value))));
}

ClosedLoopState warmed_up_state(const ScenarioConfig& cfg, std::uint64_t seed) {
  ScenarioConfig c = cfg;
  c.detector.mode = DetectorMode::kFixed;
  c.horizon = c.dt();
  return simulate(c, seed, false, [](const StepRecord&) {}).initial;
}

}  // namespace

StealthBoundResult stealth_bound(double kappa, double lambda, double lh, double lg, double lfc,
                                 double dt, int gps_divisor,
                                 const Eigen::Ref<const Eigen::MatrixXd>& imu_covariance,
                                 const Eigen::Ref<const Eigen::MatrixXd>& gps_covariance,
                                 const Vec3& c) {
  if (!(lambda > 1.0) || !std::isfinite(lambda)) {
    throw DivergentBound("stealth bound needs lambda > 1, got " + std::to_string(lambda));
  }
  if (gps_divisor < 1) throw ValidationError("gps_divisor", "must be >= 1");

  StealthBoundResult r;
  r.kappa = kappa;
  r.lambda = lambda;
  r.lh = lh;
  r.lg = lg;
  r.lfc = lfc;
  r.dt = dt;
  r.gps_divisor = gps_divisor;
  r.imu_information = max_inverse_eigenvalue(imu_covariance, "imu covariance");
  r.gps_information = max_inverse_eigenvalue(gps_covariance, "gps covariance");
  r.c_norm = c.norm();

  const double gap = kappa * r.c_norm * (1.0 + (lg + lfc) * dt);
  const double imu_sum = lh * lh * r.imu_information / (1.0 - std::pow(lambda, -2.0));
  const double gps_sum = r.gps_information / (1.0 - std::pow(lambda, -2.0 * gps_divisor));
  r.b_epsilon = gap * gap * (imu_sum + gps_sum);
  r.epsilon = std::sqrt(-std::expm1(-r.b_epsilon));
  return r;
}

std::int64_t min_effective_step(double alpha, double c_norm, double kappa, double lg, double lfc,
                                double dt) {
  return ceil_to_step(-1.0 + (alpha + kappa * c_norm * (1.0 + (lg + lfc) * dt)) / (c_norm * dt));
}

std::int64_t min_effective_step_printed(double alpha, double c_norm, double kappa, double lg,
                                        double lfc, double dt) {
  return ceil_to_step(-1.0 + (alpha + kappa * (1.0 + c_norm * (lg + lfc) * dt)) / (c_norm * dt));
}

double deviation_lower_bound(std::int64_t k, double c_norm, double dt, double kappa,
                             double initial_gap) {
  return c_norm * static_cast<double>(k + 1) * dt - kappa * initial_gap;
}

DeviationSeries deviation_series(const RunRecord& attacked, const RunRecord& nominal,
                                 std::span<const double> alphas) {
  if (attacked.seed != nominal.seed) throw MismatchedRuns("paired runs use different seeds");
  if (attacked.config_fingerprint != nominal.config_fingerprint) {
    throw MismatchedRuns("paired runs use different configs");
  }
  if (attacked.steps.size() != nominal.steps.size()) {
    throw MismatchedRuns("paired runs have different lengths");
  }
  DeviationSeries out;
  out.deviation.resize(attacked.steps.size());
  out.first_exceeding.assign(alphas.size(), std::nullopt);
  for (std::size_t k = 0; k < attacked.steps.size(); ++k) {
    const double d = (attacked.steps[k].state.segment<3>(StateVector::kPosition) -
                      nominal.steps[k].state.segment<3>(StateVector::kPosition))
                         .norm();
    out.deviation[k] = d;
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (!out.first_exceeding[a] && d >= alphas[a]) {
        out.first_exceeding[a] = static_cast<std::int64_t>(k);
      }
    }
  }
  return out;
}

NoDecay::NoDecay(const IesFit& f)
    : Error("fitted lambda " + std::to_string(f.lambda) + " <= 1: no incremental decay"), fit(f) {}

IesFit estimate_ies_constants(std::span<const GapTrace> traces) {
  std::vector<const GapTrace*> used;
  double smallest = std::numeric_limits<double>::infinity();
  double largest = 0.0;
  for (const GapTrace& t : traces) {
    if (!(t.initial_gap > 0.0)) continue;
    if (t.steps.size() != t.gaps.size() || t.steps.empty()) {
      throw InsufficientSamples("gap trace has mismatched or empty samples");
    }
    if (!used.empty() && t.steps != used.front()->steps) {
      throw InsufficientSamples("gap traces must share sample steps");
    }
    used.push_back(&t);
    smallest = std::min(smallest, t.initial_gap);
    largest = std::max(largest, t.initial_gap);
  }
  if (used.size() < 10) {
    throw InsufficientSamples("need at least 10 perturbed pairs, got " +
                              std::to_string(used.size()));
  }
  if (largest < 100.0 * smallest * (1.0 - 1e-9)) {
    throw InsufficientSamples("perturbation sizes must span two decades");
  }

  const std::vector<double>& steps = used.front()->steps;
  const std::size_t m = steps.size();
  std::vector<double> envelope(m, -std::numeric_limits<double>::infinity());
  for (const GapTrace* t : used) {
    for (std::size_t i = 0; i < m; ++i) {
      const double g = t->gaps[i];
      // An exactly zero gap carries no information about the rate.
      if (g > 0.0) envelope[i] = std::max(envelope[i], std::log(g / t->initial_gap));
    }
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(envelope[i])) continue;
    sx += steps[i];
    sy += envelope[i];
    sxx += steps[i] * steps[i];
    sxy += steps[i] * envelope[i];
    ++n;
  }
  if (n < 3) throw InsufficientSamples("envelope has fewer than 3 usable samples");
  const double nn = static_cast<double>(n);
  const double denom = nn * sxx - sx * sx;
  if (!(denom > 0.0)) throw InsufficientSamples("gap samples span no time");
  const double slope = (nn * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / nn;

  double ss_res = 0.0, ss_tot = 0.0, lifted = -std::numeric_limits<double>::infinity();
  const double mean_y = sy / nn;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(envelope[i])) continue;
    const double resid = envelope[i] - (intercept + slope * steps[i]);
    ss_res += resid * resid;
    ss_tot += (envelope[i] - mean_y) * (envelope[i] - mean_y);
    lifted = std::max(lifted, envelope[i] - slope * steps[i]);
  }

  IesFit fit;
  fit.lambda = std::exp(-slope);
  fit.kappa = std::exp(lifted);
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 0.0;
  fit.horizon = steps.back() - steps.front();
  fit.pairs = static_cast<int>(used.size());
  if (!(fit.lambda > 1.0)) throw NoDecay(fit);
  return fit;
}

void set_closed_loop_vector(ClosedLoopState& s, const Eigen::Matrix<double, 30, 1>& v) {
  s.plant.vector() = v.head<12>();
  s.estimator.mean = v.segment<12>(12);
  s.controller.position_integral = v.segment<3>(24);
  s.controller.attitude_integral = v.segment<3>(27);
}

std::vector<GapTrace> closed_loop_gap_traces(const ScenarioConfig& cfg_in, const IesOptions& opt) {
  if (opt.pairs < 1 || opt.sample_every < 1 || !(opt.horizon > 0.0) ||
      !(opt.min_perturbation > 0.0) || !(opt.max_perturbation >= opt.min_perturbation)) {
    throw ValidationError("ies", "invalid rollout options");
  }
  ScenarioConfig cfg = cfg_in;
  cfg.detector.mode = DetectorMode::kFixed;
  const ClosedLoopState base = warmed_up_state(cfg, opt.seed);
  const ClosedLoopModel model(cfg);

  const auto n_steps = static_cast<std::int64_t>(std::llround(opt.horizon / cfg.dt()));
  NoiseSource source(cfg, opt.seed);
  std::vector<StepNoise> noise(static_cast<std::size_t>(n_steps));
  for (std::int64_t k = 0; k < n_steps; ++k) noise[static_cast<std::size_t>(k)] = source.draw(k);

  const Waypoint hold{base.plant.position(), cfg.mission.front().capture_radius};
  const std::span<const Waypoint> mission(&hold, 1);

  std::vector<double> sample_steps;
  for (std::int64_t k = 0; k <= n_steps; k += opt.sample_every) {
    sample_steps.push_back(static_cast<double>(k));
  }

  using Vec30 = Eigen::Matrix<double, 30, 1>;
  auto rollout = [&](ClosedLoopState s) {
    std::vector<Vec30> samples;
    samples.reserve(sample_steps.size());
    for (std::int64_t k = 0; k <= n_steps; ++k) {
      if (k % opt.sample_every == 0) samples.push_back(closed_loop_vector(s));
      if (k == n_steps) break;
      model.step(s, k, noise[static_cast<std::size_t>(k)], Vec3::Zero(), mission);
    }
    return samples;
  };

  const std::vector<Vec30> reference = rollout(base);
  RngStream rng(opt.seed, Stream::kPerturbation);
  const double log_lo = std::log(opt.min_perturbation);
  const double log_hi = std::log(opt.max_perturbation);

  std::vector<GapTrace> traces;
  for (int j = 0; j < opt.pairs; ++j) {
    Vec30 direction;
    for (int i = 0; i < 30; ++i) direction(i) = rng.normal();
    direction.normalize();
    // Log-spaced magnitudes including both ends of the range.
    const double u = opt.pairs > 1 ? static_cast<double>(j) / (opt.pairs - 1) : 0.0;
    const double magnitude = std::exp(log_lo + u * (log_hi - log_lo));

    ClosedLoopState perturbed = base;
    set_closed_loop_vector(perturbed, closed_loop_vector(base) + magnitude * direction);
    const std::vector<Vec30> path = rollout(perturbed);

    GapTrace t;
    t.initial_gap = (path.front() - reference.front()).norm();
    t.steps = sample_steps;
    t.gaps.resize(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) t.gaps[i] = (path[i] - reference[i]).norm();
    traces.push_back(std::move(t));
  }
  return traces;
}

double estimate_lipschitz(const VectorMap& f, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                          int n, std::uint64_t seed) {
  if (n < 10000) throw InsufficientSamples("Lipschitz sampling needs n >= 10^4");
  if (lo.size() != hi.size() || lo.size() == 0 || ((hi - lo).array() < 0.0).any()) {
    throw ValidationError("box", "bounds must have equal non-zero size with lo <= hi");
  }
  const Eigen::Index d = lo.size();
  const Eigen::VectorXd width = hi - lo;
  RngStream rng(seed, Stream::kPerturbation);

  auto sample = [&] {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = lo(i) + width(i) * rng.uniform(0.0, 1.0);
    return x;
  };
  auto ratio = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double dx = (x - y).norm();
    return dx > 0.0 ? (f(x) - f(y)).norm() / dx : 0.0;
  };

  constexpr std::size_t kKeep = 8;
  std::vector<std::pair<double, Eigen::VectorXd>> best;  // ratio, anchor
  double result = 0.0;
  for (int s = 0; s < n; ++s) {
    const Eigen::VectorXd x = sample();
    Eigen::VectorXd y;
    if (s % 2 == 0) {
      y = sample();
    } else {
      y = x;
      for (Eigen::Index i = 0; i < d; ++i) y(i) += 1e-3 * width(i) * rng.normal();
      y = y.cwiseMax(lo).cwiseMin(hi);
    }
    const double r = ratio(x, y);
    result = std::max(result, r);
    if (best.size() < kKeep || r > best.back().first) {
      best.emplace_back(r, x);
      std::sort(best.begin(), best.end(),
                [](const auto& a, const auto& b) { return a.first > b.first; });
      if (best.size() > kKeep) best.pop_back();
    }
  }

  // Refinement: step from each anchor along its dominant local stretching direction.
  const double scale = std::max(width.norm(), 1e-12);
  for (const auto& [r0, x] : best) {
    const Eigen::VectorXd fx = f(x);
    Eigen::MatrixXd jac(fx.size(), d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double h = 1e-6 * std::max(1.0, width(i));
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      jac.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinV);
    const Eigen::VectorXd v = svd.matrixV().col(0);
    for (const double step : {1e-4 * scale, -1e-4 * scale, 1e-2 * scale, -1e-2 * scale}) {
      const Eigen::VectorXd y = (x + step * v).cwiseMax(lo).cwiseMin(hi);
      result = std::max(result, ratio(x, y));
    }
  }
  return result;
}

ClosedLoopLipschitz closed_loop_lipschitz(const ScenarioConfig& cfg_in, int n, std::uint64_t seed) {
  ScenarioConfig cfg = cfg_in;
  cfg.detector.mode = DetectorMode::kFixed;
  const ClosedLoopState base = warmed_up_state(cfg, seed);
  const ClosedLoopModel model(cfg);
  ClosedLoopLipschitz out;

  {
    // Attitude box |phi|, |theta| <= pi/3, wider than the set-point clamp.
    Eigen::VectorXd lo(6), hi(6);
    const double tilt = std::numbers::pi / 3.0;
    lo << -tilt, -tilt, -std::numbers::pi, -2.0, -2.0, -2.0;
    hi << tilt, tilt, std::numbers::pi, 2.0, 2.0, 2.0;
    out.lh = estimate_lipschitz(
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return imu_map(Vec6(x)); }, lo, hi, n,
        seed);
  }

  Vec12 half;
  half << 0.2, 0.2, 0.2, 0.5, 0.5, 0.5, 2.0, 2.0, 2.0, 1.0, 1.0, 1.0;

  {
    // Fusion: (previous estimate, GPS, IMU) -> corrected estimate on a GPS tick.
    const std::int64_t k = 0;
    const Vec12 x0 = base.estimator.mean;
    Eigen::VectorXd center(21), width(21);
    center << x0, x0.segment<3>(StateVector::kPosition), imu_map(x0.head<6>()) + cfg.imu.bias;
    width << half, half.segment<3>(6), half.head<6>();
    const FusionModel& fusion = model.fusion();
    EstimatorState prior = base.estimator;
    prior.step = k - 1;
    auto g = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      EstimatorState e = prior;
      e.mean = z.head<12>();
      SensorFrame frame;
      frame.step = k;
      frame.gps = Vec3(z.segment<3>(12));
      frame.imu = z.segment<6>(15);
      return fuse_step(e, base.command, frame, fusion).state.mean;
    };
    out.lg = estimate_lipschitz(g, center - width, center + width, n, seed);
  }

  {
    // Controller memory: (integrators, estimate) -> next integrators.
    const Waypoint hold{base.plant.position(), cfg.mission.front().capture_radius};
    Eigen::VectorXd center(18), width(18);
    center << base.controller.position_integral, base.controller.attitude_integral,
        base.estimator.mean;
    width << Vec6::Constant(0.5), half;
    auto fc = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
      ControllerState c = base.controller;
      c.position_integral = z.head<3>();
      c.attitude_integral = z.segment<3>(3);
      const auto next = controller_step(c, z.tail<12>(), std::span(&hold, 1), cfg.gains,
                                        cfg.vehicle, cfg.dt())
                            .first;
      Eigen::VectorXd r(6);
      r << next.position_integral, next.attitude_integral;
      return r;
    };
    out.lfc = estimate_lipschitz(fc, center - width, center + width, n, seed);
  }
  return out;
}

double gaussian_kl(const Eigen::VectorXd& mu_q, const Eigen::VectorXd& mu_p,
                   const Eigen::MatrixXd& sigma) {
  if (mu_q.size() != mu_p.size() || sigma.rows() != mu_q.size() || sigma.cols() != mu_q.size()) {
    throw ValidationError("gaussian_kl", "dimension mismatch");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || !sigma.isApprox(sigma.transpose())) {
    throw SingularCovariance("gaussian_kl: covariance must be positive definite");
  }
  const Eigen::VectorXd d = mu_q - mu_p;
  return 0.5 * d.dot(llt.solve(d));
}

double fake_replay(const ScenarioConfig& cfg, const RunRecord& attacked) {
  if (attacked.config_fingerprint != config_fingerprint(cfg)) {
    throw MismatchedRuns("record was not produced by this config");
  }
  const auto* ramp = std::get_if<RampAttack>(&cfg.attack.signal);
  if (ramp == nullptr || cfg.attack.start_step != 0) {
    throw ValidationError("attack", "fake-state replay needs a ramp attack starting at step 0");
  }
  const Vec3 c = (attacked.attack_enabled && cfg.attack.enabled) ? ramp->slope : Vec3::Zero();
  const double dt = attacked.dt;
  const ClosedLoopModel model(cfg);

  ClosedLoopState fake = attacked.initial;
  fake.plant.position() -= c * dt;
  fake.plant.velocity() -= c;

  double worst = 0.0;
  auto check = [&](double err, std::int64_t k, const char* what) {
    if (!(err <= 1e-6)) {
      throw ReplayMismatch(err, k,
                           std::string("fake-state replay diverged in ") + what + " at step " +
                               std::to_string(k));
    }
    worst = std::max(worst, err);
  };

  for (const StepRecord& r : attacked.steps) {
    const std::int64_t k = r.step;
    const double t_next = static_cast<double>(k + 1) * dt;
    const Vec12& xa = r.state;
    check((fake.plant.position() - (xa.segment<3>(StateVector::kPosition) - c * t_next))
              .cwiseAbs()
              .maxCoeff(),
          k, "position");
    check((fake.plant.velocity() - (xa.segment<3>(StateVector::kVelocity) - c)).cwiseAbs().maxCoeff(),
          k, "velocity");
    check((fake.plant.attitude() - xa.head<6>()).cwiseAbs().maxCoeff(), k, "attitude");

    model.step(fake, k, r.noise, Vec3::Zero(), cfg.mission);

    check((fake.estimator.mean - r.estimate).cwiseAbs().maxCoeff(), k, "estimate");
    const double ctrl_err = std::max(
        (fake.controller.position_integral - r.position_integral).cwiseAbs().maxCoeff(),
        (fake.controller.attitude_integral - r.attitude_integral).cwiseAbs().maxCoeff());
    check(fake.controller.waypoint_index == r.waypoint_index
              ? ctrl_err
              : std::numeric_limits<double>::infinity(),
          k, "controller");
  }
  return worst;
}

AlarmAccumulator::AlarmAccumulator(std::size_t steps) : steps_(steps) {
  for (int d = 0; d < 2; ++d) {
    nominal_[d].assign(steps, 0);
    attacked_[d].assign(steps, 0);
  }
}

namespace {

void add_verdicts(std::span<const Verdict> verdicts, std::size_t steps,
                  std::vector<std::int64_t> (&counts)[2]) {
  if (verdicts.size() != steps) {
    throw MismatchedRuns("run has " + std::to_string(verdicts.size()) + " steps, expected " +
                         std::to_string(steps));
  }
  for (std::size_t k = 0; k < steps; ++k) {
    counts[0][k] += verdicts[k].chi2_alarm ? 1 : 0;
    counts[1][k] += verdicts[k].cusum_alarm ? 1 : 0;
  }
}

AlarmCurve make_curve(const std::vector<std::int64_t>& counts, std::int64_t runs) {
  AlarmCurve c;
  c.rate.resize(counts.size());
  std::int64_t total = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    c.rate[k] = runs > 0 ? static_cast<double>(counts[k]) / static_cast<double>(runs) : 0.0;
    total += counts[k];
  }
  const auto trials = static_cast<std::size_t>(runs) * counts.size();
  if (trials > 0) {
    c.mean = static_cast<double>(total) / static_cast<double>(trials);
    std::tie(c.ci_low, c.ci_high) =
        wilson_interval(static_cast<std::size_t>(total), trials, kZ95);
  }
  return c;
}

}  // namespace

void AlarmAccumulator::add_nominal(std::span<const Verdict> verdicts) {
  add_verdicts(verdicts, steps_, nominal_);
  ++nominal_runs_;
}

void AlarmAccumulator::add_attacked(std::span<const Verdict> verdicts) {
  add_verdicts(verdicts, steps_, attacked_);
  ++attacked_runs_;
}

void AlarmAccumulator::merge(const AlarmAccumulator& other) {
  if (other.nominal_runs_ == 0 && other.attacked_runs_ == 0) return;
  if (nominal_runs_ == 0 && attacked_runs_ == 0 && steps_ == 0) {
    *this = other;
    return;
  }
  if (other.steps_ != steps_) throw MismatchedRuns("alarm accumulators cover different horizons");
  for (int d = 0; d < 2; ++d) {
    for (std::size_t k = 0; k < steps_; ++k) {
      nominal_[d][k] += other.nominal_[d][k];
      attacked_[d][k] += other.attacked_[d][k];
    }
  }
  nominal_runs_ += other.nominal_runs_;
  attacked_runs_ += other.attacked_runs_;
}

AlarmStats alarm_stats(const AlarmAccumulator& acc, double dt) {
  if (acc.nominal_runs() != acc.attacked_runs()) {
    throw MismatchedRuns("alarm statistics need equal attacked and nominal run counts");
  }
  AlarmStats s;
  s.runs = acc.nominal_runs();
  s.dt = dt;
  s.chi2.true_detection = make_curve(acc.attacked_counts(0), acc.attacked_runs());
  s.chi2.false_alarm = make_curve(acc.nominal_counts(0), acc.nominal_runs());
  s.cusum.true_detection = make_curve(acc.attacked_counts(1), acc.attacked_runs());
  s.cusum.false_alarm = make_curve(acc.nominal_counts(1), acc.nominal_runs());
  return s;
}

std::vector<Verdict> verdicts_of(const RunRecord& run) {
  std::vector<Verdict> v;
  v.reserve(run.steps.size());
  for (const StepRecord& r : run.steps) v.push_back(r.verdict);
  return v;
}

AlarmStats alarm_stats(std::span<const RunRecord> attacked, std::span<const RunRecord> nominal) {
  if (attacked.size() != nominal.size()) {
    throw MismatchedRuns("alarm statistics need equal attacked and nominal run counts");
  }
  const std::size_t steps = attacked.empty() ? 0 : attacked.front().steps.size();
  AlarmAccumulator acc(steps);
  for (const RunRecord& r : attacked) acc.add_attacked(verdicts_of(r));
  for (const RunRecord& r : nominal) acc.add_nominal(verdicts_of(r));
  const double dt = attacked.empty() ? 1e-3 : attacked.front().dt;
  return alarm_stats(acc, dt);
}

}  // namespace quadfdi
