#pragma once

#include <cstdint>
#include <random>

#include "quadfdi/config.hpp"
#include "quadfdi/simulation.hpp"

namespace quadfdi::test {

// Default scenario with fixed thresholds, so no calibration flights run.
inline ScenarioConfig fixed_config(double horizon = 5.0) {
  ScenarioConfig cfg;
  cfg.detector.mode = DetectorMode::kFixed;
  cfg.horizon = horizon;
  return cfg;
}

// Same, but shorter warm-up for tests that only need a settled loop.
inline ScenarioConfig quick_config(double horizon = 2.0) {
  ScenarioConfig cfg = fixed_config(horizon);
  cfg.warmup = 2.0;
  return cfg;
}

inline Vec12 random_state(std::mt19937_64& rng, double angle = 0.5, double rate = 1.0) {
  std::uniform_real_distribution<double> a(-angle, angle), r(-rate, rate), p(-50.0, 50.0),
      v(-3.0, 3.0);
  Vec12 x;
  for (int i = 0; i < 3; ++i) {
    x(i) = a(rng);
    x(3 + i) = r(rng);
    x(6 + i) = p(rng);
    x(9 + i) = v(rng);
  }
  return x;
}

}  // namespace quadfdi::test
