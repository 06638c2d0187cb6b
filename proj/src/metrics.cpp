// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace bridgeflow {
namespace {

// Inclusive-prefix integral image: out(i+1, j+1) = sum of x(0..i, 0..j).
Eigen::MatrixXd integral_image(const Eigen::MatrixXd& x) {
  const int rows = static_cast<int>(x.rows()), cols = static_cast<int>(x.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows + 1, cols + 1);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      out(i + 1, j + 1) = x(i, j) + out(i, j + 1) + out(i + 1, j) - out(i, j);
  return out;
}

double window_sum(const Eigen::MatrixXd& ii, int r, int c, int h, int w) {
  return ii(r + h, c + w) - ii(r, c + w) - ii(r + h, c) + ii(r, c);
}

double ssim_value(double mx, double my, double vx, double vy, double cxy, double c1, double c2) {
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
         ((mx * mx + my * my + c1) * (vx + vy + c2));
}

double ssim_global(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double c1,
                   double c2) {
  const double n = static_cast<double>(pred.size());
  const double mx = pred.mean(), my = truth.mean();
  const double vx = pred.array().square().sum() / n - mx * mx;
  const double vy = truth.array().square().sum() / n - my * my;
  const double cxy = (pred.array() * truth.array()).sum() / n - mx * my;
  return ssim_value(mx, my, vx, vy, cxy, c1, c2);
}

double ssim_2d(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double c1, double c2) {
  const int rows = static_cast<int>(pred.rows()), cols = static_cast<int>(pred.cols());
  const int wh = std::min(8, rows), ww = std::min(8, cols);
  const Eigen::MatrixXd sx = integral_image(pred);
  const Eigen::MatrixXd sy = integral_image(truth);
  const Eigen::MatrixXd sxx = integral_image(pred.cwiseProduct(pred));
  const Eigen::MatrixXd syy = integral_image(truth.cwiseProduct(truth));
  const Eigen::MatrixXd sxy = integral_image(pred.cwiseProduct(truth));
  const double n = static_cast<double>(wh) * ww;
  double total = 0.0;
  int windows = 0;
  for (int r = 0; r + wh <= rows; ++r) {
    for (int c = 0; c + ww <= cols; ++c) {
      const double mx = window_sum(sx, r, c, wh, ww) / n;
      const double my = window_sum(sy, r, c, wh, ww) / n;
      const double vx = window_sum(sxx, r, c, wh, ww) / n - mx * mx;
      const double vy = window_sum(syy, r, c, wh, ww) / n - my * my;
      const double cxy = window_sum(sxy, r, c, wh, ww) / n - mx * my;
      total += ssim_value(mx, my, vx, vy, cxy, c1, c2);
      ++windows;
    }
  }
  return total / windows;
}

}  // namespace

MetricSet compute_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth,
                          double data_range) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("metrics: pred and truth shapes differ");
  if (pred.size() == 0) throw std::invalid_argument("metrics: empty input");
  if (!(data_range > 0.0)) throw std::invalid_argument("metrics: data_range must be > 0");
  if (!pred.allFinite() || !truth.allFinite())
    throw std::invalid_argument("metrics: non-finite input");

  MetricSet set;
  const double n = static_cast<double>(pred.size());
  const Eigen::ArrayXXd diff = (pred - truth).array();
  set.mse = diff.square().sum() / n;

  const double truth_norm = truth.norm();
  if (truth_norm == 0.0) throw std::domain_error("metrics: rfne undefined for zero truth");
  set.rfne = (pred - truth).norm() / truth_norm;

  const double range2 = data_range * data_range;
  set.psnr = set.mse < range2 * 1e-20 ? 200.0 : 10.0 * std::log10(range2 / set.mse);

  const double c1 = 0.01 * data_range * 0.01 * data_range;
  const double c2 = 0.03 * data_range * 0.03 * data_range;
  set.ssim = (pred.rows() >= 2 && pred.cols() >= 2) ? ssim_2d(pred, truth, c1, c2)
                                                    : ssim_global(pred, truth, c1, c2);

  const double mx = pred.mean(), my = truth.mean();
  const double vx = pred.array().square().sum() / n - mx * mx;
  const double vy = truth.array().square().sum() / n - my * my;
  if (vx <= 0.0 || vy <= 0.0)
    throw std::domain_error("metrics: pearson undefined for zero-variance input");
  const double cxy = (pred.array() * truth.array()).sum() / n - mx * my;
  set.pearson = cxy / std::sqrt(vx * vy);
  return set;
}

}  // namespace bridgeflow
