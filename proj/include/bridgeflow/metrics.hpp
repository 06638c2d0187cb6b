// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

namespace bridgeflow {

/// Forecast-quality metrics for one (prediction, truth) pair.
struct MetricSet {
  double mse = 0.0;
  double rfne = 0.0;     // ||pred - truth||_F / ||truth||_F
  double psnr = 0.0;     // dB, capped at 200
  double ssim = 0.0;     // in [-1, 1]
  double pearson = 0.0;  // in [-1, 1]
};

/// Computes all five metrics.
///
/// Shapes must match and data_range must be > 0.  Matrices with both
/// dimensions >= 2 are treated as 2D fields: SSIM uses uniform sliding
/// windows of size min(8, rows) x min(8, cols) with population statistics and
/// C1 = (0.01 range)^2, C2 = (0.03 range)^2.  Row/column vectors use a single
/// global SSIM window.  PSNR = 10 log10(range^2 / mse), capped at 200 dB once
/// mse < range^2 * 1e-20.  Pearson is computed over the flattened arrays;
/// zero variance in either input or a zero-norm truth (for RFNE) is an error.
MetricSet compute_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                          double data_range);

}  // namespace bridgeflow
