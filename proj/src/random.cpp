#include "quadfdi/random.hpp"

#include <algorithm>

namespace quadfdi {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, Stream stream) : engine_(make_engine(seed, stream)) {}

void validate_psd(const Eigen::Ref<const Eigen::MatrixXd>& cov, const std::string& name) {
  if (cov.rows() != cov.cols() || !cov.allFinite()) {
    throw SingularCovariance(name + ": must be a finite square matrix");
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw SingularCovariance(name + ": must be symmetric");
  }
  const double eps = 1e-12 * std::max(1.0, cov.trace());
  const Eigen::MatrixXd shifted =
      cov + eps * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  if (Eigen::LLT<Eigen::MatrixXd>(shifted).info() != Eigen::Success) {
    throw SingularCovariance(name + ": must be positive semi-definite");
  }
}

}  // namespace quadfdi
