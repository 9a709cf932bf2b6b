#include "quadfdi/estimation.hpp"

#include <cmath>

#include "quadfdi/errors.hpp"

namespace quadfdi {

namespace {

Vec12 model_rhs(const Vec12& x, const ThrustTorque& ft, const VehicleParams& vehicle) {
  return continuous_derivative(StateVector(x), ft, vehicle);
}

}  // namespace

// The filter model has no drag, so the rates of position and velocity are
// linear in (p, v): only the attitude and rate columns need differencing.
Mat12 transition_jacobian(const Vec12& x, const RotorCommand& u, const VehicleParams& vehicle,
                          double dt) {
  const ThrustTorque ft = motor_mixing(u, vehicle);
  Mat12 jac = Mat12::Zero();
  Vec12 probe = x;
  for (int i = 0; i < 6; ++i) {
    probe(i) = x(i) + kJacobianStep;
    const Vec12 hi = model_rhs(probe, ft, vehicle);
    probe(i) = x(i) - kJacobianStep;
    const Vec12 lo = model_rhs(probe, ft, vehicle);
    probe(i) = x(i);
    jac.col(i) = (hi - lo) / (2.0 * kJacobianStep);
  }
  jac.block<3, 3>(StateVector::kPosition, StateVector::kVelocity).setIdentity();
  return Mat12::Identity() + dt * jac;
}

MeasVector predicted_measurement(const Vec12& x, const ImuModel& imu, bool with_gps) {
  const int offset = with_gps ? 3 : 0;
  MeasVector y(offset + 6);
  if (with_gps) y.head<3>() = x.segment<3>(StateVector::kPosition);
  y.segment<6>(offset) = imu_map(x.head<6>()) + imu.bias;
  return y;
}

EstimatorState ekf_predict(const EstimatorState& est, const RotorCommand& u_prev,
                           const FusionModel& model) {
  const ThrustTorque ft = motor_mixing(u_prev, model.vehicle);
  EstimatorState out;
  out.step = est.step + 1;
  out.mean = est.mean + model_rhs(est.mean, ft, model.vehicle) * model.dt;
  const Mat12 a = transition_jacobian(est.mean, u_prev, model.vehicle, model.dt);
  // Lazy products: Eigen's blocked GEMM path is slow at 12x12.
  const Mat12 ap = a.lazyProduct(est.covariance);
  out.covariance.noalias() = ap.lazyProduct(a.transpose());
  out.covariance += model.process_covariance;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  if (!out.mean.allFinite() || !out.covariance.allFinite()) {
    throw NonFiniteEstimate("prediction produced a non-finite estimate at step " +
                            std::to_string(out.step));
  }
  return out;
}

Mat6 imu_jacobian(const Vec6& attitude) {
  Mat6 jac;
  Vec6 probe = attitude;
  for (int i = 0; i < 6; ++i) {
    probe(i) = attitude(i) + kJacobianStep;
    const Vec6 hi = imu_map(probe);
    probe(i) = attitude(i) - kJacobianStep;
    const Vec6 lo = imu_map(probe);
    probe(i) = attitude(i);
    jac.col(i) = (hi - lo) / (2.0 * kJacobianStep);
  }
  return jac;
}

namespace {

template <int M>
FusionOutput update_fixed(const EstimatorState& predicted, const SensorFrame& frame,
                          const FusionModel& model) {
  using VecM = Eigen::Matrix<double, M, 1>;
  using MatM = Eigen::Matrix<double, M, M>;
  using MatM12 = Eigen::Matrix<double, M, 12>;
  constexpr int kOff = M - 6;

  const Vec12& x = predicted.mean;
  VecM y;
  VecM y_hat;
  MatM12 h = MatM12::Zero();
  MatM r = MatM::Zero();
  if constexpr (kOff == 3) {
    y.template head<3>() = *frame.gps;
    y_hat.template head<3>() = x.segment<3>(StateVector::kPosition);
    h.template block<3, 3>(0, StateVector::kPosition).setIdentity();
    r.template topLeftCorner<3, 3>() = model.gps.covariance;
  }
  y.template tail<6>() = frame.imu;
  y_hat.template tail<6>() = imu_map(x.head<6>()) + model.imu.bias;
  h.template block<6, 6>(kOff, 0) = imu_jacobian(x.head<6>());
  r.template bottomRightCorner<6, 6>() = model.imu.covariance;

  const Mat12& p = predicted.covariance;
  const MatM12 hp = h.lazyProduct(p);
  MatM s = hp.lazyProduct(h.transpose()) + r;
  s = 0.5 * (s + s.transpose()).eval();

  const Eigen::LDLT<MatM> ldlt(s);
  const VecM d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  const double dmin = d.minCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > 0.0) || dmax / dmin > 1e12) {
    throw SingularInnovation("innovation covariance is singular at step " +
                             std::to_string(frame.step));
  }

  // K = P H^T S^-1, computed as (S^-1 H P)^T since S and P are symmetric.
  const Eigen::Matrix<double, 12, M> k = ldlt.solve(hp).transpose();
  const VecM innovation = y - y_hat;

  FusionOutput out;
  out.innovation = innovation;
  out.innovation_cov = s;
  out.state.step = predicted.step;
  out.state.mean = x + k * innovation;
  Mat12 ikh = Mat12::Identity();
  ikh.noalias() -= k.lazyProduct(h);
  const Mat12 ikhp = ikh.lazyProduct(p);
  const Eigen::Matrix<double, 12, M> kr = k.lazyProduct(r);
  out.state.covariance.noalias() = ikhp.lazyProduct(ikh.transpose());
  out.state.covariance.noalias() += kr.lazyProduct(k.transpose());
  out.state.covariance = 0.5 * (out.state.covariance + out.state.covariance.transpose()).eval();
  if (!out.state.mean.allFinite() || !out.state.covariance.allFinite()) {
    throw NonFiniteEstimate("update produced a non-finite estimate at step " +
                            std::to_string(frame.step));
  }
  return out;
}

}  // namespace

FusionOutput ekf_update(const EstimatorState& predicted, const SensorFrame& frame,
                        const FusionModel& model) {
  if (predicted.step != frame.step) {
    throw Error("estimator at step " + std::to_string(predicted.step) +
                " cannot be updated with a frame for step " + std::to_string(frame.step));
  }
  return frame.gps ? update_fixed<9>(predicted, frame, model)
                   : update_fixed<6>(predicted, frame, model);
}

FusionOutput fuse_step(const EstimatorState& est, const RotorCommand& u_prev,
                       const SensorFrame& frame, const FusionModel& model) {
  EstimatorState predicted = ekf_predict(est, u_prev, model);
  predicted.step = frame.step;
  return ekf_update(predicted, frame, model);
}

}  // namespace quadfdi
