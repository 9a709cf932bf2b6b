#include "quadfdi/sensors.hpp"

#include <cmath>

#include "quadfdi/errors.hpp"

namespace quadfdi {

void TimingConfig::validate() const {
  if (!(imu_period > 0.0) || !std::isfinite(imu_period)) {
    throw ValidationError("timing.imu_period", "must be finite and > 0");
  }
  if (!(gps_period > 0.0) || !std::isfinite(gps_period)) {
    throw ValidationError("timing.gps_period", "must be finite and > 0");
  }
  (void)gps_divisor();
}

int TimingConfig::gps_divisor() const {
  const double ratio = gps_period / imu_period;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError("timing.gps_period",
                          "must be a positive integer multiple of timing.imu_period");
  }
  return static_cast<int>(rounded);
}

SensorSchedule sensor_schedule(std::int64_t k, int gps_divisor) {
  return k % gps_divisor == 0 ? SensorSchedule::kImuAndGps : SensorSchedule::kImuOnly;
}

Mat6 ImuModel::default_covariance() {
  Vec6 diag;
  diag << 0.002 * 0.002, 0.002 * 0.002, 0.002 * 0.002, 0.005 * 0.005, 0.005 * 0.005,
      0.005 * 0.005;
  return diag.asDiagonal();
}

Vec6 imu_map(const Vec6& attitude) {
  const double phi = attitude(0);
  const double theta = attitude(1);
  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double sth = std::sin(theta), cth = std::cos(theta);
  const double dphi = attitude(3), dtheta = attitude(4), dpsi = attitude(5);
  Vec6 out;
  out.head<3>() = attitude.head<3>();
  out(3) = dphi - sth * dpsi;
  out(4) = cphi * dtheta + sphi * cth * dpsi;
  out(5) = -sphi * dtheta + cphi * cth * dpsi;
  return out;
}

Vec3 sample_gps(const Vec3& position, const Vec3& draw) { return position + draw; }

Vec6 sample_imu(const Vec6& attitude, const Vec6& draw) { return imu_map(attitude) + draw; }

}  // namespace quadfdi
