#include "quadfdi/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "quadfdi/errors.hpp"

namespace quadfdi {

namespace {

Vec3 clamp_each(const Vec3& v, double limit) { return v.cwiseMax(-limit).cwiseMin(limit); }

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

void ControllerGains::validate() const {
  auto nonneg = [](const Vec3& v, const char* key) {
    if (!v.allFinite() || (v.array() < 0.0).any()) {
      throw ValidationError(std::string("controller.") + key, "gains must be finite and >= 0");
    }
  };
  nonneg(position_kp, "position_kp");
  nonneg(position_ki, "position_ki");
  nonneg(position_kd, "position_kd");
  nonneg(attitude_kp, "attitude_kp");
  nonneg(attitude_ki, "attitude_ki");
  nonneg(attitude_kd, "attitude_kd");
  if (!(integrator_limit > 0.0)) {
    throw ValidationError("controller.integrator_limit", "must be > 0");
  }
  if (!(max_tilt > 0.0 && max_tilt < std::numbers::pi / 2)) {
    throw ValidationError("controller.max_tilt", "must lie in (0, pi/2)");
  }
  if (!(max_position_error > 0.0)) {
    throw ValidationError("controller.max_position_error", "must be > 0");
  }
  if (!(max_rotor_speed_sq > 0.0)) {
    throw ValidationError("controller.max_rotor_speed_sq", "must be > 0");
  }
}

bool ControllerGains::operator==(const ControllerGains& o) const {
  return position_kp == o.position_kp && position_ki == o.position_ki &&
         position_kd == o.position_kd && attitude_kp == o.attitude_kp &&
         attitude_ki == o.attitude_ki && attitude_kd == o.attitude_kd &&
         integrator_limit == o.integrator_limit && max_tilt == o.max_tilt &&
         max_position_error == o.max_position_error &&
         max_rotor_speed_sq == o.max_rotor_speed_sq;
}

std::pair<ControllerState, AttitudeSetpoint> position_loop(const ControllerState& ctrl,
                                                           const Vec12& estimate,
                                                           const Waypoint& target,
                                                           const ControllerGains& gains,
                                                           const VehicleParams& vehicle,
                                                           double dt) {
  const Vec3 position = estimate.segment<3>(StateVector::kPosition);
  const Vec3 velocity = estimate.segment<3>(StateVector::kVelocity);
  const double psi = estimate(2);

  Vec3 error = target.position - position;
  const double norm = error.norm();
  if (norm > gains.max_position_error) error *= gains.max_position_error / norm;

  ControllerState next = ctrl;
  next.position_integral = clamp_each(ctrl.position_integral + error * dt, gains.integrator_limit);

  const Vec3 accel = gains.position_kp.cwiseProduct(error) +
                     gains.position_ki.cwiseProduct(next.position_integral) -
                     gains.position_kd.cwiseProduct(velocity);

  // z-acceleration is g - (F/m) cos(phi) cos(theta); keep the specific thrust
  // strictly positive so the tilt inversion stays well defined.
  const double g = vehicle.gravity;
  const double specific_thrust = std::clamp(g - accel.z(), 0.2 * g, 1.8 * g);
  const double cpsi = std::cos(psi), spsi = std::sin(psi);

  AttitudeSetpoint sp;
  const double tilt = gains.max_tilt;
  sp.angles.x() = std::clamp(std::atan((accel.x() * spsi - accel.y() * cpsi) / specific_thrust),
                             -tilt, tilt);
  sp.angles.y() = std::clamp(std::atan((accel.x() * cpsi + accel.y() * spsi) / specific_thrust),
                             -tilt, tilt);
  sp.angles.z() = 0.0;
  sp.thrust = vehicle.mass * specific_thrust / (std::cos(sp.angles.x()) * std::cos(sp.angles.y()));
  return {next, sp};
}

std::pair<ControllerState, RotorCommand> attitude_loop(const ControllerState& ctrl,
                                                       const Vec12& estimate,
                                                       const AttitudeSetpoint& setpoint,
                                                       const ControllerGains& gains,
                                                       const VehicleParams& vehicle,
                                                       double dt) {
  const Vec3 angles = estimate.head<3>();
  const Vec3 rates = estimate.segment<3>(StateVector::kRates);

  Vec3 error = setpoint.angles - angles;
  error.z() = wrap_angle(error.z());

  ControllerState next = ctrl;
  next.attitude_integral = clamp_each(ctrl.attitude_integral + error * dt, gains.integrator_limit);

  const Vec3 angular_accel = gains.attitude_kp.cwiseProduct(error) +
                             gains.attitude_ki.cwiseProduct(next.attitude_integral) -
                             gains.attitude_kd.cwiseProduct(rates);

  ThrustTorque demand;
  demand.thrust = setpoint.thrust;
  demand.torque = vehicle.inertia.cwiseProduct(angular_accel);
  return {next, saturate(inverse_mixing(demand, vehicle), gains.max_rotor_speed_sq)};
}

std::pair<ControllerState, RotorCommand> controller_step(const ControllerState& ctrl,
                                                         const Vec12& estimate,
                                                         std::span<const Waypoint> mission,
                                                         const ControllerGains& gains,
                                                         const VehicleParams& vehicle,
                                                         double dt) {
  if (mission.empty()) throw Error("controller_step: mission has no waypoints");
  ControllerState state = ctrl;
  state.waypoint_index = std::min(state.waypoint_index, mission.size() - 1);
  const Vec3 position = estimate.segment<3>(StateVector::kPosition);
  const Waypoint& active = mission[state.waypoint_index];
  if (state.waypoint_index + 1 < mission.size() &&
      (active.position - position).norm() < active.capture_radius) {
    ++state.waypoint_index;
  }
  const auto [after_position, setpoint] =
      position_loop(state, estimate, mission[state.waypoint_index], gains, vehicle, dt);
  return attitude_loop(after_position, estimate, setpoint, gains, vehicle, dt);
}

}  // namespace quadfdi
