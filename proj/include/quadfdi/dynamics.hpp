#pragma once

#include "quadfdi/types.hpp"

namespace quadfdi {

/// Rigid-body and rotor constants of the vehicle. SI units throughout.
struct VehicleParams {
  double mass = 0.65;              // kg
  double gravity = 9.81;           // m/s^2
  Vec3 inertia{7.5e-3, 7.5e-3, 1.3e-2};  // kg m^2, principal axes
  double arm_length = 0.23;        // m, motor to centre of gravity
  double thrust_coeff = 3.13e-5;   // N s^2
  double drag_coeff = 7.5e-7;      // N m s^2

  void validate() const;
  double hover_thrust() const { return mass * gravity; }
  bool operator==(const VehicleParams&) const = default;
};

/// 12-dimensional physical state [phi theta psi, rates, x y z, vx vy vz].
class StateVector {
 public:
  static constexpr int kAngles = 0;
  static constexpr int kRates = 3;
  static constexpr int kPosition = 6;
  static constexpr int kVelocity = 9;

  StateVector() : data_(Vec12::Zero()) {}
  explicit StateVector(const Vec12& data) : data_(data) {}

  static StateVector hover_at(const Vec3& position);

  auto angles() { return data_.segment<3>(kAngles); }
  auto angles() const { return data_.segment<3>(kAngles); }
  auto rates() { return data_.segment<3>(kRates); }
  auto rates() const { return data_.segment<3>(kRates); }
  auto position() { return data_.segment<3>(kPosition); }
  auto position() const { return data_.segment<3>(kPosition); }
  auto velocity() { return data_.segment<3>(kVelocity); }
  auto velocity() const { return data_.segment<3>(kVelocity); }
  /// Stacked angles and rates (the IMU-observed block).
  auto attitude() { return data_.head<6>(); }
  auto attitude() const { return data_.head<6>(); }

  Vec12& vector() { return data_; }
  const Vec12& vector() const { return data_; }
  bool all_finite() const { return data_.allFinite(); }

  bool operator==(const StateVector& o) const { return data_ == o.data_; }

 private:
  Vec12 data_;
};

/// Squared rotor speeds (rad/s)^2.
struct RotorCommand {
  Vec4 speed_sq = Vec4::Zero();

  static RotorCommand uniform(double w_sq) { return {Vec4::Constant(w_sq)}; }
  bool operator==(const RotorCommand& o) const { return speed_sq == o.speed_sq; }
};

struct ThrustTorque {
  double thrust = 0.0;  // N
  Vec3 torque = Vec3::Zero();  // N m
};

/// Simulation-only disturbance: linear drag on translational velocity and on
/// body rates. The estimator model never includes it.
struct DragModel {
  bool enabled = false;
  double linear = 0.05;    // 1/s
  double angular = 1e-4;   // N m s
  bool operator==(const DragModel&) const = default;
};

ThrustTorque motor_mixing(const RotorCommand& u, const VehicleParams& params);

/// Exact inverse of motor_mixing. The result may contain negative entries;
/// callers clamp.
RotorCommand inverse_mixing(const ThrustTorque& demand, const VehicleParams& params);

/// Clamp each squared speed into [0, max_speed_sq].
RotorCommand saturate(const RotorCommand& u, double max_speed_sq);

/// Newton-Euler right-hand side; returns d/dt of the 12-vector.
Vec12 continuous_derivative(const StateVector& x, const ThrustTorque& ft,
                            const VehicleParams& params, const DragModel& drag = {});

/// One explicit Euler step with additive process noise:
///   x' = x + f(x, u) * dt + noise
/// Throws NonFiniteState (step -1) when the result is not finite.
StateVector step_discrete(const StateVector& x, const RotorCommand& u,
                          const VehicleParams& params, const DragModel& drag,
                          double dt, const Vec12& noise);

}  // namespace quadfdi
