#include <doctest.h>

#include <random>

#include "oracles/symbolic_jacobians.hpp"
#include "quadfdi/estimation.hpp"
#include "quadfdi/random.hpp"
#include "test_support.hpp"

using namespace quadfdi;

namespace {

FusionModel default_model() {
  const ScenarioConfig cfg;
  FusionModel m;
  m.vehicle = cfg.vehicle;
  m.process_covariance = cfg.estimator_process_covariance;
  m.gps = cfg.gps;
  m.imu = cfg.imu;
  m.dt = cfg.dt();
  return m;
}

RotorCommand hover_command(const VehicleParams& p) {
  return RotorCommand::uniform(p.hover_thrust() / (4.0 * p.thrust_coeff));
}

SensorFrame exact_frame(std::int64_t k, const Vec12& x, bool gps) {
  SensorFrame f;
  f.step = k;
  f.imu = imu_map(x.head<6>());
  if (gps) f.gps = Vec3(x.segment<3>(StateVector::kPosition));
  return f;
}

}  // namespace

TEST_CASE("finite-difference transition Jacobian matches the symbolic oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> w(2e4, 8e4);
  const VehicleParams p;
  for (double dt : {1e-3, 1.0}) {
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
      const Vec12 x = test::random_state(rng, 1.2, 3.0);
      RotorCommand u;
      for (int i = 0; i < 4; ++i) u.speed_sq(i) = w(rng);
      const Mat12 fd = transition_jacobian(x, u, p, dt);
      double sym[144];
      oracle::transition_jacobian(x.data(), u.speed_sq.data(), p.mass, p.gravity, p.inertia.x(),
                                  p.inertia.y(), p.inertia.z(), p.arm_length, p.thrust_coeff,
                                  p.drag_coeff, dt, sym);
      for (int r = 0; r < 12; ++r)
        for (int c = 0; c < 12; ++c) worst = std::max(worst, std::abs(fd(r, c) - sym[r * 12 + c]));
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("finite-difference IMU Jacobian matches the symbolic oracle") {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const Vec6 a = test::random_state(rng, 1.0, 3.0).head<6>();
    const Mat6 fd = imu_jacobian(a);
    double sym[36];
    oracle::imu_jacobian(a.data(), sym);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) worst = std::max(worst, std::abs(fd(r, c) - sym[r * 6 + c]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("prediction holds a hover estimate") {
  const FusionModel m = default_model();
  EstimatorState est;
  est.mean = StateVector::hover_at(Vec3(1, 2, 10)).vector();
  const EstimatorState pred = ekf_predict(est, hover_command(m.vehicle), m);
  CHECK((pred.mean - est.mean).norm() < 1e-12);
  CHECK(pred.step == est.step + 1);
}

TEST_CASE("prediction grows the covariance trace") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> var(1e-4, 1.0);
  const FusionModel m = default_model();
  for (int n = 0; n < 100; ++n) {
    EstimatorState est;
    est.mean = StateVector::hover_at(Vec3(0, 0, 10)).vector();
    Vec12 d;
    for (int i = 0; i < 12; ++i) d(i) = var(rng);
    est.covariance = d.asDiagonal();
    const EstimatorState pred = ekf_predict(est, hover_command(m.vehicle), m);
    CHECK(pred.covariance.trace() >= est.covariance.trace());
  }
}

TEST_CASE("consistent measurements leave the estimate unchanged") {
  const FusionModel m = default_model();
  std::mt19937_64 rng(4);
  for (bool gps : {false, true}) {
    EstimatorState est;
    est.mean = test::random_state(rng, 0.3, 0.5);
    est.step = 400;
    const FusionOutput out = ekf_update(est, exact_frame(400, est.mean, gps), m);
    CHECK(out.innovation.size() == (gps ? 9 : 6));
    CHECK(out.innovation_cov.rows() == (gps ? 9 : 6));
    CHECK(out.innovation.norm() == 0.0);
    CHECK((out.state.mean - est.mean).norm() == 0.0);
    CHECK(out.state.covariance.trace() < est.covariance.trace());
  }
}

TEST_CASE("filter converges on a static vehicle from an offset") {
  const FusionModel m = default_model();
  const Vec12 truth = StateVector::hover_at(Vec3(0, 0, 10)).vector();
  const RotorCommand u = hover_command(m.vehicle);
  GaussianSampler<3> gps_noise(Vec3::Zero(), m.gps.covariance);
  GaussianSampler<6> imu_noise(Vec6::Zero(), m.imu.covariance);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    RngStream g(seed, Stream::kGps), i(seed, Stream::kImu);
    EstimatorState est;
    est.mean = truth;
    est.mean.segment<3>(StateVector::kPosition) += Vec3(2.0, -2.0, 2.0);
    est.covariance = Mat12::Identity();
    est.step = -1;
    for (std::int64_t k = 0; k < 1000; ++k) {
      SensorFrame f = exact_frame(k, truth, k % 200 == 0);
      f.imu += imu_noise(i);
      if (f.gps) *f.gps += gps_noise(g);
      est = fuse_step(est, u, f, m).state;
    }
    const double err = (est.mean - truth).segment<3>(StateVector::kPosition).norm();
    CHECK(err < 3.0 * std::sqrt(m.gps.covariance.diagonal().maxCoeff()));
  }
}

TEST_CASE("covariance stays symmetric positive semi-definite") {
  const FusionModel m = default_model();
  const Vec12 truth = StateVector::hover_at(Vec3(0, 0, 10)).vector();
  const RotorCommand u = hover_command(m.vehicle);
  GaussianSampler<3> gps_noise(Vec3::Zero(), m.gps.covariance);
  GaussianSampler<6> imu_noise(Vec6::Zero(), m.imu.covariance);
  RngStream g(5, Stream::kGps), i(5, Stream::kImu);
  EstimatorState est;
  est.mean = truth;
  est.step = -1;
  double min_eig = 1.0;
  double asym = 0.0;
  for (std::int64_t k = 0; k < 100000; ++k) {
    SensorFrame f = exact_frame(k, truth, k % 200 == 0);
    f.imu += imu_noise(i);
    if (f.gps) *f.gps += gps_noise(g);
    est = fuse_step(est, u, f, m).state;
    if (k % 50 == 0) {
      const Eigen::SelfAdjointEigenSolver<Mat12> eig(est.covariance, Eigen::EigenvaluesOnly);
      min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
      asym = std::max(asym, (est.covariance - est.covariance.transpose()).cwiseAbs().maxCoeff());
    }
  }
  CHECK(min_eig >= -1e-10);
  CHECK(asym == 0.0);
}

TEST_CASE("singular innovation covariance is reported") {
  FusionModel m = default_model();
  m.gps.covariance.setZero();
  EstimatorState est;
  est.covariance.setZero();
  est.mean = StateVector::hover_at(Vec3(0, 0, 10)).vector();
  CHECK_THROWS_AS(ekf_update(est, exact_frame(0, est.mean, true), m), SingularInnovation);
  // IMU-only frames do not involve the GPS block.
  CHECK_NOTHROW(ekf_update(est, exact_frame(0, est.mean, false), m));
}

TEST_CASE("update refuses a frame for another step") {
  const FusionModel m = default_model();
  EstimatorState est;
  est.step = 3;
  CHECK_THROWS_AS(ekf_update(est, exact_frame(4, est.mean, false), m), Error);
}

TEST_CASE("fusion is deterministic") {
  const FusionModel m = default_model();
  std::mt19937_64 rng(31);
  EstimatorState est;
  est.mean = test::random_state(rng, 0.3, 0.5);
  SensorFrame f = exact_frame(0, test::random_state(rng, 0.3, 0.5), true);
  est.step = -1;
  const RotorCommand u = RotorCommand::uniform(5.1e4);
  const FusionOutput a = fuse_step(est, u, f, m);
  const FusionOutput b = fuse_step(est, u, f, m);
  CHECK(a.state.mean == b.state.mean);
  CHECK(a.state.covariance == b.state.covariance);
  CHECK(a.innovation == b.innovation);
  CHECK(a.innovation_cov == b.innovation_cov);
}
