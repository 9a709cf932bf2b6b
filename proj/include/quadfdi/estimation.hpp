#pragma once

#include <cstdint>

#include "quadfdi/dynamics.hpp"
#include "quadfdi/sensors.hpp"
#include "quadfdi/types.hpp"

namespace quadfdi {

/// Everything the fusion filter knows about the world. It deliberately has no
/// drag term and never sees the true plant state.
struct FusionModel {
  VehicleParams vehicle;
  Mat12 process_covariance = Mat12::Identity();
  GpsNoiseModel gps;
  ImuModel imu;
  double dt = 1e-3;
};

struct EstimatorState {
  Vec12 mean = Vec12::Zero();
  Mat12 covariance = Mat12::Identity() * 1e-2;
  std::int64_t step = 0;
};

struct FusionOutput {
  EstimatorState state;
  MeasVector innovation;       // y - y_hat, ordered [gps (if present); imu]
  MeasMatrix innovation_cov;   // H P H^T + R
};

/// Central finite-difference step shared by every Jacobian in the filter.
inline constexpr double kJacobianStep = 1e-6;

/// Jacobian of the discrete transition x + f(x,u) dt, i.e. I + dt * df/dx.
Mat12 transition_jacobian(const Vec12& x, const RotorCommand& u, const VehicleParams& vehicle,
                          double dt);

/// Jacobian of imu_map; it depends on the attitude and rates only.
Mat6 imu_jacobian(const Vec6& attitude);

/// Stacked predicted measurement for a frame with or without GPS.
MeasVector predicted_measurement(const Vec12& x, const ImuModel& imu, bool with_gps);

EstimatorState ekf_predict(const EstimatorState& est, const RotorCommand& u_prev,
                           const FusionModel& model);

/// Throws SingularInnovation if the innovation covariance is not numerically
/// invertible (condition number above 1e12).
FusionOutput ekf_update(const EstimatorState& predicted, const SensorFrame& frame,
                        const FusionModel& model);

/// Predict to the frame's step, then correct with the frame.
FusionOutput fuse_step(const EstimatorState& est, const RotorCommand& u_prev,
                       const SensorFrame& frame, const FusionModel& model);

}  // namespace quadfdi
