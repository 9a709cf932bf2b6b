#include <doctest.h>

#include "quadfdi/attack.hpp"
#include "test_support.hpp"

using namespace quadfdi;

TEST_CASE("ramp signal at the first step") {
  const Vec3 a = ramp_attack_signal(0, Vec3(0.05, 0, 0), 0, 1e-3);
  CHECK(a.x() == doctest::Approx(-5e-5).epsilon(1e-12));
  CHECK(a.y() == 0.0);
  CHECK(a.z() == 0.0);
}

TEST_CASE("ramp reaches ten metres after 200 s") {
  const Vec3 a = ramp_attack_signal(199999, Vec3(0.05, 0, 0), 0, 1e-3);
  CHECK(a.x() == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(a.tail<2>().norm() == 0.0);
}

TEST_CASE("zero slope never injects") {
  for (std::int64_t k : {0, 1, 200, 199999}) {
    CHECK(ramp_attack_signal(k, Vec3::Zero(), 0, 1e-3).norm() == 0.0);
  }
}

TEST_CASE("ramp time base restarts at the start step") {
  const Vec3 c(0.01, -0.02, 0.03);
  CHECK(ramp_attack_signal(1000, c, 1000, 1e-3) == ramp_attack_signal(0, c, 0, 1e-3));
  CHECK(ramp_attack_signal(1400, c, 1000, 1e-3) == ramp_attack_signal(400, c, 0, 1e-3));
}

TEST_CASE("attack is gated by enable flag, start step and GPS ticks") {
  AttackConfig cfg{true, 400, RampAttack{Vec3(0.05, 0, 0)}};
  CHECK(attack_signal(200, cfg, 1e-3, 200).norm() == 0.0);  // before start
  CHECK(attack_signal(401, cfg, 1e-3, 200).norm() == 0.0);  // off tick
  CHECK(attack_signal(400, cfg, 1e-3, 200) == ramp_attack_signal(400, Vec3(0.05, 0, 0), 400, 1e-3));
  CHECK(attack_signal(600, cfg, 1e-3, 200).x() == doctest::Approx(-0.05 * 0.201));
  cfg.enabled = false;
  CHECK(attack_signal(600, cfg, 1e-3, 200).norm() == 0.0);

  AttackConfig bias{true, 0, BiasAttack{Vec3(5, 0, 0)}};
  CHECK(attack_signal(0, bias, 1e-3, 200) == Vec3(5, 0, 0));
  CHECK(attack_signal(1, bias, 1e-3, 200).norm() == 0.0);
}

TEST_CASE("injection is additive") {
  CHECK(inject(Vec3(1, 1, 1), Vec3::Zero()) == Vec3(1, 1, 1));
  const Vec3 y = inject(Vec3(1, 1, 1), Vec3(-0.1, 0, 0));
  CHECK(y.x() == doctest::Approx(0.9));
  CHECK(y.y() == 1.0);
  CHECK(y.z() == 1.0);
}

TEST_CASE("interception leaves the IMU channel alone") {
  SensorFrame f;
  f.step = 200;
  f.imu << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  f.gps = Vec3(1, 2, 3);
  const SensorFrame g = intercept(f, Vec3(-1, 0, 2));
  CHECK(g.imu == f.imu);
  CHECK(*g.gps == Vec3(0, 2, 5));
  CHECK(g.step == f.step);

  SensorFrame imu_only = f;
  imu_only.gps.reset();
  const SensorFrame h = intercept(imu_only, Vec3(-1, 0, 2));
  CHECK(!h.gps);
  CHECK(h.imu == f.imu);
}

TEST_CASE("delivered GPS is true position plus noise plus ramp") {
  auto cfg = test::quick_config(2.0);
  const Vec3 c(0.05, 0.0, 0.0);
  cfg.attack = AttackConfig{true, 0, RampAttack{c}};
  const RunRecord r = run_scenario(cfg, 21, true);
  int ticks = 0;
  for (const StepRecord& s : r.steps) {
    if (!s.has_gps) {
      CHECK(s.attack.norm() == 0.0);
      continue;
    }
    ++ticks;
    const Vec3 p = s.state.segment<3>(StateVector::kPosition);
    const Vec3 expected = p + s.noise.gps - c * (static_cast<double>(s.step + 1) * cfg.dt());
    CHECK((s.gps - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.attack == ramp_attack_signal(s.step, c, 0, cfg.dt()));
  }
  CHECK(ticks == 10);
}
