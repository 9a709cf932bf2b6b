#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "quadfdi/types.hpp"

namespace quadfdi {

/// Thresholds and CUSUM parameters. The chi-square threshold is split by
/// innovation size because IMU-only steps carry 6 degrees of freedom and GPS
/// steps carry 9.
struct DetectorConfig {
  double chi2_threshold_imu = 16.81;  // 6 dof
  double chi2_threshold_gps = 21.67;  // 9 dof
  double cusum_threshold = 50.0;
  std::optional<double> cusum_drift;  // empty: drift = innovation dof
  bool reset_on_alarm = true;

  double chi2_threshold(int dof) const { return dof > 6 ? chi2_threshold_gps : chi2_threshold_imu; }
  double drift(int dof) const { return cusum_drift ? *cusum_drift : static_cast<double>(dof); }
  bool operator==(const DetectorConfig&) const = default;
};

struct CusumState {
  double statistic = 0.0;
};

struct DetectorState {
  DetectorConfig config;
  CusumState cusum;
};

struct Verdict {
  std::int64_t step = 0;
  int dof = 0;
  double chi2 = 0.0;
  bool chi2_alarm = false;
  double cusum = 0.0;  // value compared with the threshold, before any reset
  bool cusum_alarm = false;
};

struct Chi2Result {
  double statistic = 0.0;
  bool alarm = false;
};

/// nu^T S^-1 nu. Throws SingularInnovation for a non-invertible S.
double chi2_statistic(const MeasVector& innovation, const MeasMatrix& cov);

Chi2Result chi2_step(const MeasVector& innovation, const MeasMatrix& cov, double threshold);

struct CusumResult {
  CusumState state;
  double statistic = 0.0;
  bool alarm = false;
};

/// S' = max(0, S + score - drift); alarm iff S' > threshold, after which S
/// restarts from 0 when `reset_on_alarm` is set.
CusumResult cusum_step(const CusumState& state, double score, double drift, double threshold,
                       bool reset_on_alarm);

std::pair<DetectorState, Verdict> detector_step(const DetectorState& state, std::int64_t step,
                                                const MeasVector& innovation,
                                                const MeasMatrix& cov);

// --- threshold calibration ---------------------------------------------------

/// Per-step chi-square scores of one attack-free run. Entries before
/// `counted_from` warm the CUSUM up but are not counted as samples.
struct ScoreTrace {
  std::vector<double> chi2;
  std::vector<std::uint8_t> dof;
  std::size_t counted_from = 0;
};

struct Calibration {
  double threshold = 0.0;
  double achieved_rate = 0.0;
  double ci_low = 0.0;   // 95% Wilson interval on achieved_rate
  double ci_high = 0.0;
  std::size_t samples = 0;
};

/// Linear-interpolation quantile (the common "type 7" definition).
double empirical_quantile(std::vector<double> values, double q);

/// Threshold at the (1 - target) quantile of attack-free scores. Throws
/// InsufficientSamples below 50 / target samples.
Calibration calibrate_quantile(std::span<const double> scores, double target_pfa);

/// Fraction of counted steps at which a CUSUM with the given threshold alarms.
double cusum_alarm_rate(std::span<const ScoreTrace> traces, double threshold,
                        const std::optional<double>& drift, bool reset_on_alarm,
                        std::size_t* counted = nullptr);

/// Smallest CUSUM threshold whose replayed attack-free alarm rate is at most
/// the target. Reset-on-alarm makes the rate depend on the threshold itself,
/// so this bisects on replayed score traces instead of taking a quantile.
Calibration calibrate_cusum(std::span<const ScoreTrace> traces, double target_pfa,
                            const std::optional<double>& drift, bool reset_on_alarm);

struct DetectorCalibration {
  DetectorConfig config;
  Calibration chi2_imu;
  Calibration chi2_gps;
  Calibration cusum;
};

DetectorCalibration calibrate_detectors(std::span<const ScoreTrace> traces, double target_pfa,
                                        const std::optional<double>& drift, bool reset_on_alarm);

}  // namespace quadfdi
