#include "quadfdi/attack.hpp"

namespace quadfdi {

Vec3 ramp_attack_signal(std::int64_t k, const Vec3& slope, std::int64_t start_step, double dt) {
  const double t_next = static_cast<double>(k + 1 - start_step) * dt;
  return -slope * t_next;
}

Vec3 attack_signal(std::int64_t k, const AttackConfig& cfg, double dt, int gps_divisor) {
  if (!cfg.enabled || k < cfg.start_step ||
      sensor_schedule(k, gps_divisor) != SensorSchedule::kImuAndGps) {
    return Vec3::Zero();
  }
  struct Visitor {
    std::int64_t k;
    std::int64_t start;
    double dt;
    Vec3 operator()(const RampAttack& r) const { return ramp_attack_signal(k, r.slope, start, dt); }
    Vec3 operator()(const BiasAttack& b) const { return b.offset; }
  };
  return std::visit(Visitor{k, cfg.start_step, dt}, cfg.signal);
}

SensorFrame intercept(const SensorFrame& frame, const Vec3& a) {
  SensorFrame out = frame;
  if (out.gps) out.gps = inject(*out.gps, a);
  return out;
}

}  // namespace quadfdi
