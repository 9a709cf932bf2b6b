#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "quadfdi/config.hpp"
#include "quadfdi/control.hpp"
#include "quadfdi/detection.hpp"
#include "quadfdi/estimation.hpp"
#include "quadfdi/random.hpp"

namespace quadfdi {

/// Closed-loop state X = (plant, estimator, controller) plus the command
/// applied on the previous step, which the next fusion step consumes.
struct ClosedLoopState {
  StateVector plant;
  EstimatorState estimator;
  ControllerState controller;
  RotorCommand command;
};

/// Exogenous draws for one step. The GPS draw is zero off GPS ticks.
struct StepNoise {
  Vec12 process = Vec12::Zero();
  Vec3 gps = Vec3::Zero();
  Vec6 imu = Vec6::Zero();
};

/// Draws StepNoise from the three per-run streams. GPS draws are consumed only
/// on GPS ticks, so the sequence never depends on whether an attack is on.
class NoiseSource {
 public:
  NoiseSource(const ScenarioConfig& cfg, std::uint64_t seed);
  StepNoise draw(std::int64_t k);

 private:
  int gps_divisor_;
  RngStream process_rng_;
  RngStream gps_rng_;
  RngStream imu_rng_;
  GaussianSampler<12> process_;
  GaussianSampler<3> gps_;
  GaussianSampler<6> imu_;
};

struct StepOutput {
  SensorFrame frame;  // as delivered to the estimator
  FusionOutput fusion;
};

/// The closed-loop map F: sense, inject, fuse, control, then advance the plant.
class ClosedLoopModel {
 public:
  explicit ClosedLoopModel(const ScenarioConfig& cfg);

  /// Advances `state` by one step. `attack` is added to the GPS sample when
  /// the step is a GPS tick. Throws NonFiniteState carrying `k`.
  StepOutput step(ClosedLoopState& state, std::int64_t k, const StepNoise& noise,
                  const Vec3& attack, std::span<const Waypoint> mission) const;

  const FusionModel& fusion() const { return fusion_; }
  const ScenarioConfig& config() const { return cfg_; }
  int gps_divisor() const { return gps_divisor_; }

 private:
  ScenarioConfig cfg_;
  FusionModel fusion_;
  int gps_divisor_;
};

/// Closed-loop state at the start of the warm-up: hovering at the initial
/// position, estimate perturbed by a draw from the estimator-init stream.
ClosedLoopState initial_closed_loop(const ScenarioConfig& cfg, std::uint64_t seed);

/// Everything logged at step k (k >= 0). `state` is x_k before the step;
/// estimate and controller fields are their values after the step.
struct StepRecord {
  std::int64_t step = 0;
  Vec12 state = Vec12::Zero();
  Vec12 estimate = Vec12::Zero();
  Vec3 position_integral = Vec3::Zero();
  Vec3 attitude_integral = Vec3::Zero();
  std::uint32_t waypoint_index = 0;
  Vec4 command = Vec4::Zero();
  Vec6 imu = Vec6::Zero();
  Vec3 gps = Vec3::Zero();
  bool has_gps = false;
  Vec3 attack = Vec3::Zero();
  Eigen::Matrix<double, kMaxMeasurement, 1> innovation =
      Eigen::Matrix<double, kMaxMeasurement, 1>::Zero();
  StepNoise noise;
  Verdict verdict;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  bool attack_enabled = false;
  double dt = 1e-3;
  int gps_divisor = 200;
  ClosedLoopState initial;  // state entering step 0, after the warm-up
  DetectorState initial_detector;
  std::vector<StepRecord> steps;
};

using StepSink = std::function<void(const StepRecord&)>;

struct CalibrationReport {
  DetectorCalibration calibration;
  int runs = 0;
  double chi2_mean_imu = 0.0;  // attack-free mean over counted 6-dof samples
  double chi2_mean_gps = 0.0;  // and over 9-dof samples
};

/// Thresholds from `runs` attack-free flights of detector.calibration_horizon
/// seconds each, seeded cfg.seed + 1000000 + i so they never coincide with
/// experiment seeds.
CalibrationReport calibrate_scenario(const ScenarioConfig& cfg, double target_pfa, int runs);

/// Detector thresholds the scenario will use. In calibrate mode this runs
/// attack-free calibration flights (seeds offset from cfg.seed).
DetectorConfig resolve_detector(const ScenarioConfig& cfg);

/// Returns `cfg` with detector mode fixed to the resolved thresholds.
ScenarioConfig with_resolved_detector(const ScenarioConfig& cfg);

/// Runs the warm-up and the recorded horizon, streaming each StepRecord to
/// `sink`. With `attack_enabled` false the injection is gated off but every
/// noise stream is consumed identically. Detectors use cfg's fixed
/// thresholds; calibrate-mode configs must be resolved first.
/// Returns the header fields of the run (steps left empty).
RunRecord simulate(const ScenarioConfig& cfg, std::uint64_t seed, bool attack_enabled,
                   const StepSink& sink);

/// Everything a run carries out of the attack-free warm-up. Both members of
/// a nominal/attacked pair share it, so it can be computed once.
struct WarmStart {
  std::uint64_t seed = 0;
  ClosedLoopState state;
  DetectorState detector;
  NoiseSource noise;
};

/// Runs the warm-up only.
WarmStart warm_start(const ScenarioConfig& cfg, std::uint64_t seed);

/// The recorded horizon of simulate(), continuing from `warm` (copied, so the
/// same warm start can seed both runs of a pair).
RunRecord simulate_from(const ScenarioConfig& cfg, const WarmStart& warm, bool attack_enabled,
                        const StepSink& sink);

/// simulate() collecting every step.
RunRecord run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, bool attack_enabled);

/// Attack-free chi-square score trace including the warm-up, for calibration.
ScoreTrace score_trace(const ScenarioConfig& cfg, std::uint64_t seed, double horizon);

/// Concatenated closed-loop vector (plant, estimate, integrators) used for
/// incremental-stability gaps.
Eigen::Matrix<double, 30, 1> closed_loop_vector(const ClosedLoopState& s);

}  // namespace quadfdi
