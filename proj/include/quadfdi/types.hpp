#pragma once

#include <Eigen/Dense>

namespace quadfdi {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

// Measurement-sized storage: IMU-only frames stack 6 rows, GPS frames 9.
inline constexpr int kMaxMeasurement = 9;
using MeasVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxMeasurement, 1>;
using MeasMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxMeasurement, kMaxMeasurement>;
using MeasJacobian = Eigen::Matrix<double, Eigen::Dynamic, 12, 0, kMaxMeasurement, 12>;

}  // namespace quadfdi
