#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "quadfdi/errors.hpp"
#include "quadfdi/types.hpp"

namespace quadfdi {

/// Named noise streams. Each run derives one engine per stream from its seed,
/// so consuming one stream never shifts another.
enum class Stream : std::uint32_t {
  kProcess = 1,
  kGps = 2,
  kImu = 3,
  kEstimatorInit = 4,
  kPerturbation = 5,
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, Stream stream);

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Throws SingularCovariance unless `cov` is symmetric and `cov + eps*I` admits
/// a Cholesky factor.
void validate_psd(const Eigen::Ref<const Eigen::MatrixXd>& cov, const std::string& name);

/// Draws from N(mean, cov) for a positive semi-definite `cov`. The square-root
/// factor comes from an eigendecomposition so rank-deficient (including zero)
/// covariances are allowed.
template <int N>
class GaussianSampler {
 public:
  using Vector = Eigen::Matrix<double, N, 1>;
  using Matrix = Eigen::Matrix<double, N, N>;

  GaussianSampler() : mean_(Vector::Zero()), factor_(Matrix::Zero()) {}

  GaussianSampler(const Vector& mean, const Matrix& cov) : mean_(mean) {
    validate_psd(cov, "covariance");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = eig.eigenvectors() * root.asDiagonal();
  }

  Vector operator()(RngStream& rng) const {
    Vector z;
    for (int i = 0; i < N; ++i) z(i) = rng.normal();
    return mean_ + factor_ * z;
  }

  const Vector& mean() const { return mean_; }

 private:
  Vector mean_;
  Matrix factor_;
};

}  // namespace quadfdi
