#include <doctest.h>

#include <cmath>
#include <random>

#include "quadfdi/control.hpp"
#include "quadfdi/errors.hpp"
#include "test_support.hpp"

using namespace quadfdi;

namespace {

Vec12 hover_estimate(const Vec3& p) { return StateVector::hover_at(p).vector(); }

}  // namespace

TEST_CASE("position loop at the waypoint commands hover") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  const Waypoint w{Vec3(4, 5, 10), 2.0};
  const auto [next, sp] = position_loop(ControllerState{}, hover_estimate(w.position), w, gains,
                                        vehicle, 1e-3);
  CHECK(sp.angles.norm() == 0.0);
  CHECK(sp.thrust == doctest::Approx(vehicle.hover_thrust()).epsilon(1e-14));
  CHECK(next.position_integral.norm() == 0.0);
}

TEST_CASE("a +x error pitches forward") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  const Waypoint w{Vec3(1, 0, 10), 2.0};
  const auto [next, sp] = position_loop(ControllerState{}, hover_estimate(Vec3(0, 0, 10)), w,
                                        gains, vehicle, 1e-3);
  CHECK(sp.angles.y() > 0.0);
  CHECK(sp.angles.x() == 0.0);
  CHECK(sp.angles.z() == 0.0);
  CHECK(next.position_integral.x() > 0.0);
}

TEST_CASE("tilt set-points stay inside the clamp") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 1000; ++i) {
    ControllerState c;
    c.position_integral = test::random_state(rng).segment<3>(6) / 25.0;
    const Vec12 est = test::random_state(rng, 0.5, 1.0) * 3.0;
    const Waypoint w{test::random_state(rng).segment<3>(6), 2.0};
    const auto [next, sp] = position_loop(c, est, w, gains, vehicle, 1e-3);
    CHECK(std::abs(sp.angles.x()) <= gains.max_tilt);
    CHECK(std::abs(sp.angles.y()) <= gains.max_tilt);
    CHECK(sp.thrust > 0.0);
    CHECK(next.position_integral.cwiseAbs().maxCoeff() <= gains.integrator_limit);
  }
}

TEST_CASE("level attitude with hover thrust gives equal rotors") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  AttitudeSetpoint sp;
  sp.thrust = vehicle.hover_thrust();
  const auto [next, u] = attitude_loop(ControllerState{}, hover_estimate(Vec3(0, 0, 10)), sp,
                                       gains, vehicle, 1e-3);
  CHECK((u.speed_sq.array() - u.speed_sq(0)).abs().maxCoeff() == 0.0);
  const ThrustTorque ft = motor_mixing(u, vehicle);
  CHECK(std::abs(ft.thrust - vehicle.hover_thrust()) < 1e-9);
  CHECK(ft.torque.norm() < 1e-9);
}

TEST_CASE("zero demand gives a zero command") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  const auto [next, u] = attitude_loop(ControllerState{}, hover_estimate(Vec3::Zero()),
                                       AttitudeSetpoint{}, gains, vehicle, 1e-3);
  CHECK(u.speed_sq.norm() == 0.0);
}

TEST_CASE("rotor commands are clamped into range") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  AttitudeSetpoint sp;
  sp.thrust = 0.0;
  sp.angles = Vec3(0.5, 0.0, 0.0);  // roll torque with no thrust forces a negative rotor
  auto [next, u] = attitude_loop(ControllerState{}, hover_estimate(Vec3::Zero()), sp, gains,
                                 vehicle, 1e-3);
  CHECK(u.speed_sq.minCoeff() == 0.0);
  sp.thrust = 1e3;
  std::tie(next, u) = attitude_loop(ControllerState{}, hover_estimate(Vec3::Zero()), sp, gains,
                                    vehicle, 1e-3);
  CHECK(u.speed_sq.maxCoeff() == gains.max_rotor_speed_sq);
}

TEST_CASE("integrators are clamped") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  const Waypoint far{Vec3(100, -100, 50), 2.0};
  AttitudeSetpoint sp;
  sp.angles = Vec3(0.7, -0.7, 3.0);
  sp.thrust = vehicle.hover_thrust();
  ControllerState c;
  for (int k = 0; k < 20000; ++k) {
    c = position_loop(c, hover_estimate(Vec3::Zero()), far, gains, vehicle, 1e-3).first;
    c = attitude_loop(c, hover_estimate(Vec3::Zero()), sp, gains, vehicle, 1e-3).first;
  }
  CHECK(c.position_integral.cwiseAbs().maxCoeff() == gains.integrator_limit);
  CHECK(c.attitude_integral.cwiseAbs().maxCoeff() == gains.integrator_limit);
}

TEST_CASE("closed-loop 1 m step settles within 5 s") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  StateVector x = StateVector::hover_at(Vec3(0, 0, 10));
  const Waypoint w{Vec3(1, 0, 10), 0.01};
  ControllerState c;
  double last_outside = 0.0;
  for (int k = 0; k < 15000; ++k) {
    RotorCommand u;
    std::tie(c, u) = controller_step(c, x.vector(), std::span(&w, 1), gains, vehicle, 1e-3);
    x = step_discrete(x, u, vehicle, DragModel{}, 1e-3, Vec12::Zero());
    if (std::abs(x.position().x() - 1.0) > 0.05) last_outside = (k + 1) * 1e-3;
  }
  CHECK(last_outside <= 5.0);
  CHECK(std::abs(x.position().x() - 1.0) < 1e-3);
  CHECK(std::abs(x.position().z() - 10.0) < 1e-3);
}

TEST_CASE("waypoint cursor advances inside the capture radius and holds the last") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  const std::vector<Waypoint> mission{{Vec3(0, 0, 10), 2.0}, {Vec3(10, 0, 10), 2.0}};
  ControllerState c;
  c = controller_step(c, hover_estimate(Vec3(5, 0, 10)), mission, gains, vehicle, 1e-3).first;
  CHECK(c.waypoint_index == 0);
  c = controller_step(c, hover_estimate(Vec3(1.5, 0, 10)), mission, gains, vehicle, 1e-3).first;
  CHECK(c.waypoint_index == 1);
  c = controller_step(c, hover_estimate(Vec3(10, 0, 10)), mission, gains, vehicle, 1e-3).first;
  CHECK(c.waypoint_index == 1);
  CHECK_THROWS_AS(controller_step(c, hover_estimate(Vec3::Zero()), std::span<const Waypoint>{},
                                  gains, vehicle, 1e-3),
                  Error);
}

TEST_CASE("controller is deterministic") {
  const ControllerGains gains;
  const VehicleParams vehicle;
  std::mt19937_64 rng(12);
  const std::vector<Waypoint> mission = ScenarioConfig::square_mission();
  for (int i = 0; i < 100; ++i) {
    const Vec12 est = test::random_state(rng, 0.3, 0.5);
    ControllerState c;
    c.position_integral = Vec3(0.1, -0.2, 0.3);
    const auto a = controller_step(c, est, mission, gains, vehicle, 1e-3);
    const auto b = controller_step(c, est, mission, gains, vehicle, 1e-3);
    CHECK(a.second == b.second);
    CHECK(a.first.position_integral == b.first.position_integral);
    CHECK(a.first.attitude_integral == b.first.attitude_integral);
  }
}

TEST_CASE("gain validation") {
  ControllerGains g;
  CHECK_NOTHROW(g.validate());
  g.position_kp.x() = -1.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = ControllerGains{};
  g.max_tilt = 2.0;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}
