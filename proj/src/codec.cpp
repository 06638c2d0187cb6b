// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/codec.hpp"

#include <Eigen/Dense>
#include <stdexcept>

#include "bridgeflow/tensorfile.hpp"

namespace bridgeflow {

LinearCodec::LinearCodec(Eigen::MatrixXd basis, Eigen::VectorXd mean)
    : basis_(std::move(basis)), mean_(std::move(mean)) {
  if (basis_.rows() != mean_.size())
    throw std::invalid_argument("codec: basis rows must match mean dimension");
  if (basis_.cols() < 1 || basis_.cols() > basis_.rows())
    throw std::invalid_argument("codec: latent dimension must lie in [1, d]");
  const Eigen::MatrixXd gram = basis_.transpose() * basis_;
  if ((gram - Eigen::MatrixXd::Identity(basis_.cols(), basis_.cols())).cwiseAbs().maxCoeff() >
      1e-10)
    throw std::invalid_argument("codec: basis columns must be orthonormal");
}

LinearCodec LinearCodec::fit(const Eigen::MatrixXd& states, int p) {
  const int n = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());
  if (n < 1 || d < 1) throw std::invalid_argument("codec fit: empty state matrix");
  if (p < 1 || p > std::min(n, d))
    throw std::invalid_argument("codec fit: p must lie in [1, min(N, d)] = [1, " +
                                std::to_string(std::min(n, d)) + "], got " + std::to_string(p));
  const Eigen::VectorXd mean = states.colwise().mean().transpose();
  const Eigen::MatrixXd centered = states.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("codec fit: eigendecomposition failed");

  // Eigenvalues come back ascending; take the trailing p columns in
  // descending-eigenvalue order, with a deterministic sign convention.
  Eigen::MatrixXd basis(d, p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd col = solver.eigenvectors().col(d - 1 - j);
    int arg_max = 0;
    col.cwiseAbs().maxCoeff(&arg_max);
    if (col(arg_max) < 0.0) col = -col;
    basis.col(j) = col;
  }
  return LinearCodec(std::move(basis), mean);
}

LinearCodec LinearCodec::identity(int d) {
  if (d < 1) throw std::invalid_argument("codec identity: d must be >= 1");
  return LinearCodec(Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d));
}

Eigen::VectorXd LinearCodec::encode(const Eigen::VectorXd& x) const {
  if (x.size() != basis_.rows())
    throw std::invalid_argument("codec encode: expected dimension " +
                                std::to_string(basis_.rows()));
  return basis_.transpose() * (x - mean_);
}

Eigen::VectorXd LinearCodec::decode(const Eigen::VectorXd& z) const {
  if (z.size() != basis_.cols())
    throw std::invalid_argument("codec decode: expected dimension " +
                                std::to_string(basis_.cols()));
  return basis_ * z + mean_;
}

Eigen::MatrixXd LinearCodec::encode_rows(const Eigen::MatrixXd& xs) const {
  if (xs.cols() != basis_.rows())
    throw std::invalid_argument("codec encode_rows: expected " + std::to_string(basis_.rows()) +
                                " columns");
  return (xs.rowwise() - mean_.transpose()) * basis_;
}

Eigen::MatrixXd LinearCodec::decode_rows(const Eigen::MatrixXd& zs) const {
  if (zs.cols() != basis_.cols())
    throw std::invalid_argument("codec decode_rows: expected " + std::to_string(basis_.cols()) +
                                " columns");
  return (zs * basis_.transpose()).rowwise() + mean_.transpose();
}

double LinearCodec::reconstruction_mse(const Eigen::MatrixXd& states) const {
  const Eigen::MatrixXd diff = decode_rows(encode_rows(states)) - states;
  return diff.array().square().mean();
}

void LinearCodec::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "codec_basis", "codec_basis", basis_);
  write_vector(dir / "codec_mean", "codec_mean", mean_);
}

LinearCodec LinearCodec::load(const std::filesystem::path& dir) {
  return LinearCodec(read_matrix(dir / "codec_basis"), read_vector(dir / "codec_mean"));
}

}  // namespace bridgeflow
