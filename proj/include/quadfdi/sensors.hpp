#pragma once

#include <cstdint>
#include <optional>

#include "quadfdi/types.hpp"

namespace quadfdi {

/// IMU-rate step and GPS period. The loop runs at the IMU rate.
struct TimingConfig {
  double imu_period = 1e-3;  // s, also the control period
  double gps_period = 0.2;   // s

  void validate() const;
  /// Number of IMU steps per GPS sample. Throws ValidationError when the
  /// periods are not an integral ratio.
  int gps_divisor() const;
  bool operator==(const TimingConfig&) const = default;
};

enum class SensorSchedule { kImuOnly, kImuAndGps };

/// GPS samples land on steps with k mod N_g == 0, including negative
/// (pre-attack) steps.
SensorSchedule sensor_schedule(std::int64_t k, int gps_divisor);
inline SensorSchedule sensor_schedule(std::int64_t k, const TimingConfig& timing) {
  return sensor_schedule(k, timing.gps_divisor());
}

struct GpsNoiseModel {
  Mat3 covariance = 0.25 * Mat3::Identity();
  bool operator==(const GpsNoiseModel& o) const { return covariance == o.covariance; }
};

struct ImuModel {
  Vec6 bias = Vec6::Zero();
  Mat6 covariance = default_covariance();

  static Mat6 default_covariance();
  bool operator==(const ImuModel& o) const {
    return bias == o.bias && covariance == o.covariance;
  }
};

/// IMU observation map: Euler angles pass through, Euler-angle rates are
/// rotated into body angular rates by the kinematic matrix W(angles).
Vec6 imu_map(const Vec6& attitude);

Vec3 sample_gps(const Vec3& position, const Vec3& draw);

/// `draw` is a sample of N(bias, Sigma_Omega); the bias is already in it.
Vec6 sample_imu(const Vec6& attitude, const Vec6& draw);

struct SensorFrame {
  std::int64_t step = 0;
  Vec6 imu = Vec6::Zero();
  std::optional<Vec3> gps;

  int size() const { return gps ? 9 : 6; }
};

}  // namespace quadfdi
