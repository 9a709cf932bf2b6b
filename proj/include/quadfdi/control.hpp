#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "quadfdi/dynamics.hpp"
#include "quadfdi/types.hpp"

namespace quadfdi {

struct ControllerGains {
  // Each loop is s^3 + kd s^2 + kp s + ki on a double integrator. Defaults
  // place the position poles at -1.2, -1.8, -2.4 and attitude at -6, -8, -10.
  Vec3 position_kp{9.36, 9.36, 9.36};
  Vec3 position_ki{5.184, 5.184, 5.184};
  Vec3 position_kd{5.4, 5.4, 5.4};
  Vec3 attitude_kp{188.0, 188.0, 188.0};
  Vec3 attitude_ki{480.0, 480.0, 480.0};
  Vec3 attitude_kd{24.0, 24.0, 24.0};
  double integrator_limit = 2.0;
  double max_tilt = 0.7853981633974483;  // rad
  // Position error is clamped to this norm before the PID, which bounds the
  // commanded cruise speed to roughly kp * max_position_error / kd.
  double max_position_error = 1.15;  // m
  double max_rotor_speed_sq = 1e6;

  void validate() const;
  bool operator==(const ControllerGains& o) const;
};

struct Waypoint {
  Vec3 position = Vec3::Zero();
  double capture_radius = 2.0;  // m
  bool operator==(const Waypoint& o) const {
    return position == o.position && capture_radius == o.capture_radius;
  }
};

/// Internal controller state: clamped integrators plus the mission cursor.
struct ControllerState {
  Vec3 position_integral = Vec3::Zero();
  Vec3 attitude_integral = Vec3::Zero();
  std::size_t waypoint_index = 0;
};

struct AttitudeSetpoint {
  Vec3 angles = Vec3::Zero();  // phi_ref, theta_ref, psi_ref
  double thrust = 0.0;         // N
};

/// Outer loop: PID on the global-frame position error, then inversion of the
/// translational dynamics (heading held at the estimate) into tilt and
/// thrust set-points. Reference yaw is always 0.
std::pair<ControllerState, AttitudeSetpoint> position_loop(const ControllerState& ctrl,
                                                           const Vec12& estimate,
                                                           const Waypoint& target,
                                                           const ControllerGains& gains,
                                                           const VehicleParams& vehicle,
                                                           double dt);

/// Inner loop: PID on attitude error with rate damping, scaled by inertia into
/// torques, then mapped through the inverse mixer and clamped.
std::pair<ControllerState, RotorCommand> attitude_loop(const ControllerState& ctrl,
                                                       const Vec12& estimate,
                                                       const AttitudeSetpoint& setpoint,
                                                       const ControllerGains& gains,
                                                       const VehicleParams& vehicle,
                                                       double dt);

/// Both loops at the IMU rate. The cursor advances once the estimate is inside
/// the active waypoint's capture radius; the last waypoint is held.
std::pair<ControllerState, RotorCommand> controller_step(const ControllerState& ctrl,
                                                         const Vec12& estimate,
                                                         std::span<const Waypoint> mission,
                                                         const ControllerGains& gains,
                                                         const VehicleParams& vehicle,
                                                         double dt);

}  // namespace quadfdi
