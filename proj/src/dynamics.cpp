#include "quadfdi/dynamics.hpp"

#include <cmath>

#include "quadfdi/errors.hpp"

namespace quadfdi {

void VehicleParams::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError(std::string("vehicle.") + key, "must be finite and > 0");
    }
  };
  positive(mass, "mass");
  positive(gravity, "gravity");
  positive(inertia.x(), "inertia");
  positive(inertia.y(), "inertia");
  positive(inertia.z(), "inertia");
  positive(arm_length, "arm_length");
  positive(thrust_coeff, "thrust_coeff");
  positive(drag_coeff, "drag_coeff");
}

StateVector StateVector::hover_at(const Vec3& position) {
  StateVector x;
  x.position() = position;
  return x;
}

ThrustTorque motor_mixing(const RotorCommand& u, const VehicleParams& params) {
  const double b = params.thrust_coeff;
  const double bl = b * params.arm_length;
  const double d = params.drag_coeff;
  const Vec4& w = u.speed_sq;
  ThrustTorque out;
  out.thrust = b * (w(0) + w(1) + w(2) + w(3));
  out.torque.x() = bl * (w(3) - w(1));
  out.torque.y() = bl * (w(0) - w(2));
  out.torque.z() = d * (-w(0) + w(1) - w(2) + w(3));
  return out;
}

RotorCommand inverse_mixing(const ThrustTorque& demand, const VehicleParams& params) {
  const double sum = demand.thrust / params.thrust_coeff;
  const double roll = demand.torque.x() / (params.thrust_coeff * params.arm_length);
  const double pitch = demand.torque.y() / (params.thrust_coeff * params.arm_length);
  const double yaw = demand.torque.z() / params.drag_coeff;
  // w2 + w4 and w1 + w3 split the total by the yaw balance.
  const double even = 0.5 * (sum + yaw);
  const double odd = 0.5 * (sum - yaw);
  RotorCommand u;
  u.speed_sq << 0.5 * (odd + pitch), 0.5 * (even - roll), 0.5 * (odd - pitch),
      0.5 * (even + roll);
  return u;
}

RotorCommand saturate(const RotorCommand& u, double max_speed_sq) {
  return {u.speed_sq.cwiseMax(0.0).cwiseMin(max_speed_sq)};
}

Vec12 continuous_derivative(const StateVector& x, const ThrustTorque& ft,
                            const VehicleParams& params, const DragModel& drag) {
  const double phi = x.angles()(0);
  const double theta = x.angles()(1);
  const double psi = x.angles()(2);
  const Vec3 rates = x.rates();
  const Vec3& I = params.inertia;

  Vec3 torque = ft.torque;
  if (drag.enabled) torque -= drag.angular * rates;

  const double sphi = std::sin(phi), cphi = std::cos(phi);
  const double sth = std::sin(theta), cth = std::cos(theta);
  const double spsi = std::sin(psi), cpsi = std::cos(psi);
  const double thrust_per_mass = ft.thrust / params.mass;

  Vec12 dx;
  dx.segment<3>(StateVector::kAngles) = rates;
  dx(3) = (I.y() - I.z()) / I.x() * rates(1) * rates(2) + torque.x() / I.x();
  dx(4) = (I.z() - I.x()) / I.y() * rates(0) * rates(2) + torque.y() / I.y();
  dx(5) = (I.x() - I.y()) / I.z() * rates(1) * rates(0) + torque.z() / I.z();
  dx.segment<3>(StateVector::kPosition) = x.velocity();
  dx(9) = thrust_per_mass * (cphi * sth * cpsi + sphi * spsi);
  dx(10) = thrust_per_mass * (cphi * sth * spsi - sphi * cpsi);
  dx(11) = params.gravity - thrust_per_mass * cphi * cth;
  if (drag.enabled) dx.segment<3>(StateVector::kVelocity) -= drag.linear * x.velocity();
  return dx;
}

StateVector step_discrete(const StateVector& x, const RotorCommand& u,
                          const VehicleParams& params, const DragModel& drag,
                          double dt, const Vec12& noise) {
  const Vec12 rhs = continuous_derivative(x, motor_mixing(u, params), params, drag);
  StateVector next(x.vector() + rhs * dt + noise);
  if (!next.all_finite()) throw NonFiniteState(-1, "plant state became non-finite");
  return next;
}

}  // namespace quadfdi
