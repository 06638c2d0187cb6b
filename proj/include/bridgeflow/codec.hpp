// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <filesystem>

namespace bridgeflow {

/// Linear (principal-component) encoder/decoder pair:
///   encode(x) = basis^T (x - mean),   decode(z) = basis z + mean.
/// The basis is d x p with orthonormal columns, so decode(encode(x)) is the
/// orthogonal projection of x onto the fitted affine subspace and
/// encode(decode(z)) = z exactly.
class LinearCodec {
 public:
  /// Fits the top-p principal directions of the centered rows of `states`
  /// (N x d).  Requires 1 <= p <= min(N, d).  The sign of each basis column
  /// is fixed deterministically (largest-magnitude entry positive).
  static LinearCodec fit(const Eigen::MatrixXd& states, int p);

  /// Identity codec (p = d, basis = I, mean = 0): the pipeline then operates
  /// directly in data space.
  static LinearCodec identity(int d);

  Eigen::VectorXd encode(const Eigen::VectorXd& x) const;
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const;
  /// Row-wise variants: N x d -> N x p and back.
  Eigen::MatrixXd encode_rows(const Eigen::MatrixXd& xs) const;
  Eigen::MatrixXd decode_rows(const Eigen::MatrixXd& zs) const;

  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  int data_dim() const { return static_cast<int>(basis_.rows()); }
  int latent_dim() const { return static_cast<int>(basis_.cols()); }

  /// Mean squared reconstruction error of decode(encode(.)) over rows.
  double reconstruction_mse(const Eigen::MatrixXd& states) const;

  void save(const std::filesystem::path& dir) const;
  static LinearCodec load(const std::filesystem::path& dir);

 private:
  LinearCodec(Eigen::MatrixXd basis, Eigen::VectorXd mean);

  Eigen::MatrixXd basis_;  // d x p, orthonormal columns
  Eigen::VectorXd mean_;   // d
};

}  // namespace bridgeflow
