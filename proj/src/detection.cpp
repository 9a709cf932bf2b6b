#include "quadfdi/detection.hpp"

#include <algorithm>
#include <cmath>

#include "quadfdi/errors.hpp"
#include "quadfdi/stats.hpp"

namespace quadfdi {

double chi2_statistic(const MeasVector& innovation, const MeasMatrix& cov) {
  const Eigen::LDLT<MeasMatrix> ldlt(cov);
  const auto d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 0.0) ||
      d.cwiseAbs().maxCoeff() / d.minCoeff() > 1e12) {
    throw SingularInnovation("chi2: innovation covariance is singular");
  }
  return innovation.dot(ldlt.solve(innovation));
}

Chi2Result chi2_step(const MeasVector& innovation, const MeasMatrix& cov, double threshold) {
  const double g = chi2_statistic(innovation, cov);
  return {g, g > threshold};
}

CusumResult cusum_step(const CusumState& state, double score, double drift, double threshold,
                       bool reset_on_alarm) {
  CusumResult out;
  out.statistic = std::max(0.0, state.statistic + score - drift);
  out.alarm = out.statistic > threshold;
  out.state.statistic = (out.alarm && reset_on_alarm) ? 0.0 : out.statistic;
  return out;
}

std::pair<DetectorState, Verdict> detector_step(const DetectorState& state, std::int64_t step,
                                                const MeasVector& innovation,
                                                const MeasMatrix& cov) {
  const int dof = static_cast<int>(innovation.size());
  const Chi2Result chi2 = chi2_step(innovation, cov, state.config.chi2_threshold(dof));
  const CusumResult cusum = cusum_step(state.cusum, chi2.statistic, state.config.drift(dof),
                                       state.config.cusum_threshold, state.config.reset_on_alarm);
  DetectorState next = state;
  next.cusum = cusum.state;
  Verdict v;
  v.step = step;
  v.dof = dof;
  v.chi2 = chi2.statistic;
  v.chi2_alarm = chi2.alarm;
  v.cusum = cusum.statistic;
  v.cusum_alarm = cusum.alarm;
  return {next, v};
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InsufficientSamples("quantile of an empty sample");
  q = std::clamp(q, 0.0, 1.0);
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double v_lo = values[lo];
  double v_hi = v_lo;
  if (hi != lo) {
    v_hi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
  }
  return v_lo + (pos - static_cast<double>(lo)) * (v_hi - v_lo);
}

namespace {

void require_samples(std::size_t n, double target_pfa) {
  if (!(target_pfa > 0.0 && target_pfa < 1.0)) {
    throw InsufficientSamples("target false-alarm rate must lie in (0, 1)");
  }
  const double needed = 50.0 / target_pfa;
  if (static_cast<double>(n) < needed) {
    throw InsufficientSamples("calibration needs at least " +
                              std::to_string(static_cast<std::size_t>(std::ceil(needed))) +
                              " samples, got " + std::to_string(n));
  }
}

Calibration with_interval(double threshold, std::size_t alarms, std::size_t n) {
  Calibration c;
  c.threshold = threshold;
  c.samples = n;
  c.achieved_rate = n ? static_cast<double>(alarms) / static_cast<double>(n) : 0.0;
  std::tie(c.ci_low, c.ci_high) = wilson_interval(alarms, n, kZ95);
  return c;
}

}  // namespace

Calibration calibrate_quantile(std::span<const double> scores, double target_pfa) {
  require_samples(scores.size(), target_pfa);
  const double threshold =
      empirical_quantile(std::vector<double>(scores.begin(), scores.end()), 1.0 - target_pfa);
  const auto alarms = static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [&](double s) { return s > threshold; }));
  return with_interval(threshold, alarms, scores.size());
}

double cusum_alarm_rate(std::span<const ScoreTrace> traces, double threshold,
                        const std::optional<double>& drift, bool reset_on_alarm,
                        std::size_t* counted) {
  std::size_t alarms = 0;
  std::size_t n = 0;
  for (const ScoreTrace& trace : traces) {
    CusumState state;
    for (std::size_t i = 0; i < trace.chi2.size(); ++i) {
      const double nu = drift ? *drift : static_cast<double>(trace.dof[i]);
      const CusumResult r = cusum_step(state, trace.chi2[i], nu, threshold, reset_on_alarm);
      state = r.state;
      if (i >= trace.counted_from) {
        ++n;
        if (r.alarm) ++alarms;
      }
    }
  }
  if (counted) *counted = n;
  return n ? static_cast<double>(alarms) / static_cast<double>(n) : 0.0;
}

Calibration calibrate_cusum(std::span<const ScoreTrace> traces, double target_pfa,
                            const std::optional<double>& drift, bool reset_on_alarm) {
  std::size_t n = 0;
  (void)cusum_alarm_rate(traces, std::numeric_limits<double>::infinity(), drift, false, &n);
  require_samples(n, target_pfa);

  // Without resets the statistic is maximal, so its peak bounds the search.
  double hi = 0.0;
  for (const ScoreTrace& trace : traces) {
    double s = 0.0;
    for (std::size_t i = 0; i < trace.chi2.size(); ++i) {
      s = std::max(0.0, s + trace.chi2[i] - (drift ? *drift : trace.dof[i]));
      if (i >= trace.counted_from) hi = std::max(hi, s);
    }
  }
  double lo = 0.0;
  for (int iter = 0; iter < 100 && hi - lo > 1e-9 * std::max(1.0, hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (cusum_alarm_rate(traces, mid, drift, reset_on_alarm) > target_pfa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double rate = cusum_alarm_rate(traces, hi, drift, reset_on_alarm);
  return with_interval(hi, static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))), n);
}

DetectorCalibration calibrate_detectors(std::span<const ScoreTrace> traces, double target_pfa,
                                        const std::optional<double>& drift, bool reset_on_alarm) {
  std::vector<double> imu_scores;
  std::vector<double> gps_scores;
  for (const ScoreTrace& trace : traces) {
    for (std::size_t i = trace.counted_from; i < trace.chi2.size(); ++i) {
      (trace.dof[i] > 6 ? gps_scores : imu_scores).push_back(trace.chi2[i]);
    }
  }
  DetectorCalibration out;
  out.chi2_imu = calibrate_quantile(imu_scores, target_pfa);
  out.chi2_gps = calibrate_quantile(gps_scores, target_pfa);
  out.cusum = calibrate_cusum(traces, target_pfa, drift, reset_on_alarm);
  out.config.chi2_threshold_imu = out.chi2_imu.threshold;
  out.config.chi2_threshold_gps = out.chi2_gps.threshold;
  out.config.cusum_threshold = out.cusum.threshold;
  out.config.cusum_drift = drift;
  out.config.reset_on_alarm = reset_on_alarm;
  return out;
}

}  // namespace quadfdi
