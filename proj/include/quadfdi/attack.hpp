#pragma once

#include <cstdint>
#include <variant>

#include "quadfdi/sensors.hpp"
#include "quadfdi/types.hpp"

namespace quadfdi {

/// Linearly growing GPS offset a_k = -C t_{k+1}; `slope` is C in m/s.
struct RampAttack {
  Vec3 slope = Vec3::Zero();
  bool operator==(const RampAttack& o) const { return slope == o.slope; }
};

/// Constant GPS offset. Not stealthy; used as a detector sanity check.
struct BiasAttack {
  Vec3 offset = Vec3::Zero();
  bool operator==(const BiasAttack& o) const { return offset == o.offset; }
};

using AttackSignal = std::variant<RampAttack, BiasAttack>;

/// Where and when the GPS interceptor injects. The attacker only knows the
/// step counter and the sample period.
struct AttackConfig {
  bool enabled = false;
  std::int64_t start_step = 0;
  AttackSignal signal = RampAttack{};

  bool operator==(const AttackConfig&) const = default;
};

/// a_k = -C (k + 1 - k0) dt. Callers guarantee k >= k0.
Vec3 ramp_attack_signal(std::int64_t k, const Vec3& slope, std::int64_t start_step, double dt);

/// Offset injected at step k: zero when disabled, before the start step, or
/// off a GPS tick.
Vec3 attack_signal(std::int64_t k, const AttackConfig& cfg, double dt, int gps_divisor);

/// y^{p,c,a} = y^{p,a} + a.
inline Vec3 inject(const Vec3& gps, const Vec3& a) { return gps + a; }

/// Applies the injection to a frame. Only the GPS channel is ever touched.
SensorFrame intercept(const SensorFrame& frame, const Vec3& a);

}  // namespace quadfdi
