#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "quadfdi/attack.hpp"
#include "quadfdi/control.hpp"
#include "quadfdi/detection.hpp"
#include "quadfdi/dynamics.hpp"
#include "quadfdi/sensors.hpp"

namespace quadfdi {

enum class DetectorMode { kFixed, kCalibrate };

struct DetectorSettings {
  DetectorMode mode = DetectorMode::kCalibrate;
  DetectorConfig thresholds;         // used as-is in fixed mode
  double target_pfa = 0.01;
  int calibration_runs = 40;
  double calibration_horizon = 30.0;  // s of attack-free flight per run

  bool operator==(const DetectorSettings&) const = default;
};

/// Complete description of one experiment. Every field is written out by
/// emit_config and required by parse_config.
struct ScenarioConfig {
  VehicleParams vehicle;
  Vec3 initial_position{0.0, 0.0, 10.0};
  DragModel drag{true, 0.05, 1e-4};
  Mat12 process_covariance = default_process_covariance();

  TimingConfig timing;
  double warmup = 10.0;    // s flown (hovering) before step 0
  double horizon = 250.0;  // s recorded from step 0

  GpsNoiseModel gps;
  ImuModel imu;

  // The filter's Q. Larger than the true process noise on velocity so the
  // filter stays consistent under unmodelled drag.
  Mat12 estimator_process_covariance = default_estimator_process_covariance();
  double estimator_initial_covariance = 1e-2;
  double estimator_initial_spread = 1e-4;  // variance of the initial estimate error

  ControllerGains gains;
  std::vector<Waypoint> mission = square_mission();

  // The config text gives the start in seconds; it is stored as a step.
  AttackConfig attack{true, 0, RampAttack{Vec3(0.05, 0.0, 0.0)}};

  DetectorSettings detector;
  std::uint64_t seed = 1;

  static Mat12 default_process_covariance();
  static Mat12 default_estimator_process_covariance();
  static std::vector<Waypoint> square_mission();

  std::int64_t warmup_steps() const;
  std::int64_t horizon_steps() const;
  double dt() const { return timing.imu_period; }

  /// Throws ValidationError naming the offending key.
  void validate() const;
  bool operator==(const ScenarioConfig& o) const;
};

/// Sectioned key = value text; arrays are bracketed comma lists. Unknown
/// sections or keys and missing keys are errors.
ScenarioConfig parse_config(std::string_view text);
std::string emit_config(const ScenarioConfig& cfg);

ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& cfg, const std::filesystem::path& path);

/// FNV-1a hash of the emitted text, used to pair runs.
std::uint64_t config_fingerprint(const ScenarioConfig& cfg);

}  // namespace quadfdi
