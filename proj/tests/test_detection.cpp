#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <random>

#include "quadfdi/detection.hpp"
#include "quadfdi/errors.hpp"
#include "quadfdi/random.hpp"
#include "test_support.hpp"

using namespace quadfdi;

namespace {

MeasVector vec(std::initializer_list<double> xs) {
  MeasVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MeasMatrix identity(int n) { return MeasMatrix::Identity(n, n); }

}  // namespace

TEST_CASE("chi-square statistic") {
  const Chi2Result zero = chi2_step(vec({0, 0, 0}), identity(3), 1.0);
  CHECK(zero.statistic == 0.0);
  CHECK_FALSE(zero.alarm);

  const Chi2Result three = chi2_step(vec({1, 1, 1}), identity(3), 2.5);
  CHECK(three.statistic == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(three.alarm);
  CHECK_FALSE(chi2_step(vec({1, 1, 1}), identity(3), 3.0).alarm);

  MeasMatrix s = identity(2);
  s(0, 0) = 4.0;
  CHECK(chi2_statistic(vec({2, 1}), s) == doctest::Approx(2.0));

  MeasMatrix singular = MeasMatrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK_THROWS_AS(chi2_statistic(vec({1, 1}), singular), SingularInnovation);
}

TEST_CASE("CUSUM recursion") {
  const CusumResult below = cusum_step(CusumState{}, 4.0, 6.0, 50.0, true);
  CHECK(below.statistic == 0.0);
  CHECK_FALSE(below.alarm);

  const CusumResult over = cusum_step(CusumState{}, 7.0, 6.0, 0.5, true);
  CHECK(over.statistic == 1.0);
  CHECK(over.alarm);
  CHECK(over.state.statistic == 0.0);

  const CusumResult kept = cusum_step(CusumState{}, 7.0, 6.0, 0.5, false);
  CHECK(kept.alarm);
  CHECK(kept.state.statistic == 1.0);
}

TEST_CASE("constant excess alarms first at ceil(threshold / excess)") {
  const double nu = 6.0;
  for (auto [tau, delta] : {std::pair{50.0, 3.0}, {10.0, 0.7}, {0.5, 1.0}, {123.4, 2.5}}) {
    CusumState s;
    int first = -1;
    for (int n = 1; n <= 10000 && first < 0; ++n) {
      const CusumResult r = cusum_step(s, nu + delta, nu, tau, true);
      s = r.state;
      if (r.alarm) first = n;
    }
    CHECK(first == static_cast<int>(std::ceil(tau / delta)));
  }
}

TEST_CASE("CUSUM statistic is never negative") {
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> score(0.2);
  CusumState s;
  for (int i = 0; i < 100000; ++i) {
    const CusumResult r = cusum_step(s, score(rng), 5.0, 40.0, i % 2 == 0);
    REQUIRE(r.statistic >= 0.0);
    REQUIRE(r.state.statistic >= 0.0);
    s = r.state;
  }
}

TEST_CASE("detector step picks the threshold and drift by innovation size") {
  DetectorState d;
  d.config.chi2_threshold_imu = 5.0;
  d.config.chi2_threshold_gps = 100.0;
  d.config.cusum_threshold = 1000.0;
  const MeasVector imu = MeasVector::Constant(6, 1.0);  // statistic 6
  const MeasVector gps = MeasVector::Constant(9, 1.0);  // statistic 9
  auto [d1, v1] = detector_step(d, 0, imu, identity(6));
  CHECK(v1.dof == 6);
  CHECK(v1.chi2 == doctest::Approx(6.0));
  CHECK(v1.chi2_alarm);
  CHECK(v1.cusum == doctest::Approx(0.0).epsilon(1e-12));
  auto [d2, v2] = detector_step(d1, 1, gps, identity(9));
  CHECK(v2.dof == 9);
  CHECK_FALSE(v2.chi2_alarm);
  CHECK(v2.step == 1);

  d.config.cusum_drift = 2.0;
  auto [d3, v3] = detector_step(d, 0, imu, identity(6));
  CHECK(v3.cusum == doctest::Approx(4.0));
  CHECK(d3.cusum.statistic == doctest::Approx(4.0));
}

TEST_CASE("quantile calibration") {
  std::vector<double> symmetric;
  for (int i = 0; i <= 200; ++i) symmetric.push_back(i - 100.0);
  CHECK(calibrate_quantile(symmetric, 0.5).threshold == doctest::Approx(0.0));
  CHECK(empirical_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));

  std::vector<double> few(4999, 1.0);
  CHECK_THROWS_AS(calibrate_quantile(few, 0.01), InsufficientSamples);
  few.push_back(1.0);
  CHECK_NOTHROW(calibrate_quantile(few, 0.01));
  CHECK_THROWS_AS(calibrate_quantile(few, 0.0), InsufficientSamples);
}

TEST_CASE("calibrated chi-square threshold matches the analytic quantile") {
  RngStream rng(3, Stream::kProcess);
  std::vector<double> scores(1000000);
  for (double& s : scores) {
    s = 0.0;
    for (int i = 0; i < 9; ++i) {
      const double z = rng.normal();
      s += z * z;
    }
  }
  const Calibration c = calibrate_quantile(scores, 0.001);
  const boost::math::chi_squared_distribution<double> chi9(9.0);
  const double analytic = boost::math::quantile(chi9, 0.999);
  CHECK(std::abs(c.threshold - analytic) / analytic < 0.02);
  // The true exceedance probability at the calibrated threshold lies inside
  // the reported interval.
  const double true_rate = boost::math::cdf(boost::math::complement(chi9, c.threshold));
  CHECK(true_rate >= c.ci_low);
  CHECK(true_rate <= c.ci_high);
  CHECK(c.ci_low <= 0.001);
  CHECK(c.ci_high >= 0.001);
}

TEST_CASE("CUSUM calibration meets the target on held-out traces") {
  RngStream rng(5, Stream::kProcess);
  auto make = [&](int n) {
    ScoreTrace t;
    t.counted_from = 100;
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < 6; ++j) {
        const double z = rng.normal();
        s += z * z;
      }
      t.chi2.push_back(s);
      t.dof.push_back(6);
    }
    return t;
  };
  std::vector<ScoreTrace> fit, held;
  for (int i = 0; i < 10; ++i) fit.push_back(make(20000));
  for (int i = 0; i < 10; ++i) held.push_back(make(20000));
  const Calibration c = calibrate_cusum(fit, 0.01, std::nullopt, true);
  CHECK(c.achieved_rate <= 0.01);
  CHECK(c.ci_low <= 0.01);
  CHECK(c.ci_high >= 0.01);
  std::size_t n = 0;
  const double held_rate = cusum_alarm_rate(held, c.threshold, std::nullopt, true, &n);
  const double sigma = std::sqrt(0.01 * 0.99 / static_cast<double>(n));
  CHECK(std::abs(held_rate - 0.01) < 4.0 * sigma);

  std::vector<ScoreTrace> tiny{make(200)};
  CHECK_THROWS_AS(calibrate_cusum(tiny, 0.01, std::nullopt, true), InsufficientSamples);
}

TEST_CASE("closed-loop chi-square statistic has mean close to its dof") {
  auto cfg = test::fixed_config();
  cfg.detector.calibration_horizon = 30.0;
  const CalibrationReport r = calibrate_scenario(cfg, 0.05, 14);
  CHECK(r.chi2_mean_imu == doctest::Approx(6.0).epsilon(0.05));
  CHECK(r.chi2_mean_gps == doctest::Approx(9.0).epsilon(0.05));
  CHECK(r.calibration.chi2_imu.samples >= 100000);
  CHECK(r.calibration.cusum.threshold > 0.0);
}
