// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "bridgeflow/codec.hpp"
#include "bridgeflow/config.hpp"
#include "bridgeflow/metrics.hpp"
#include "bridgeflow/model.hpp"
#include "bridgeflow/rng.hpp"

namespace bridgeflow {

enum class Scheme { euler, rk4 };

Scheme scheme_from_name(const std::string& name);
std::string scheme_name(Scheme scheme);

struct SamplerConfig {
  Scheme scheme = Scheme::rk4;
  int steps = 10;             // N; used when grid is empty
  std::vector<double> grid;   // optional explicit s_0=0 < ... < s_N=1
  double sigma_sam = 0.0;     // start-ball standard deviation
  int ensemble = 1;           // ensemble size E
  std::uint64_t seed = 0;

  /// Reads `<table>.{scheme,steps,sigma_sam,ensemble,seed,grid}`; grid is a
  /// comma-separated string of knots.
  static SamplerConfig from_config(const Config& cfg, const std::string& table = "sampler");
  void validate() const;
  /// The explicit grid, or the uniform grid with `steps` intervals.
  std::vector<double> effective_grid() const;
};

/// A vector field v_s(y | y0, y_cond, gap): the learned model or a
/// closed-form stand-in for tests.
using VfFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                                           const Eigen::VectorXd& y_cond, double gap, double s)>;

/// Adapts a trained model to the integrator's callable form.
VfFn make_vf(const VectorFieldModel& model);

/// One-step-ahead forecast: starts from a Gaussian ball of radius sigma_sam
/// around the encoded last prefix row and integrates the vector field over
/// [0,1].  Each integration step draws a fresh condition index c ~ U{2..T-1}
/// and conditions on (Y_0, encode(prefix row T-c), gap T-c); RK4's four stage
/// evaluations within a step share that draw.  Returns the decoded state.
/// The prefix rows are normalized data states x^1..x^{T-1}; requires T-1 >= 2.
Eigen::VectorXd forecast_next(const VfFn& vf, const LinearCodec& codec,
                              const Eigen::MatrixXd& prefix, const SamplerConfig& cfg, Rng& rng);

struct ForecastReport {
  std::vector<Eigen::MatrixXd> members;  // E forecasts, each horizon x d
  Eigen::MatrixXd ensemble_mean;         // horizon x d
  std::vector<MetricSet> per_step;       // member-averaged, vs truth
  MetricSet aggregate;                   // over all steps and members
  bool has_metrics = false;

  /// Columns: step,mse,rfne,psnr,ssim,pearson (requires metrics).
  void write_csv(const std::filesystem::path& file) const;
  /// member_<e> tensors plus ensemble_mean.
  void write_tensors(const std::filesystem::path& dir) const;
};

/// Autoregressive rollout: repeats forecast_next `horizon` times, appending
/// each prediction to the conditioning prefix.  Member e runs from an rng
/// seeded with derive_seed(cfg.seed, e); members run in parallel.  When
/// `truth` (horizon x d, normalized) is given, fills per-step and aggregate
/// metrics; fields of shape field_h x field_w are reshaped for windowed SSIM
/// (0 = treat states as vectors).
ForecastReport rollout(const VfFn& vf, const LinearCodec& codec, const Eigen::MatrixXd& prefix,
                       int horizon, const SamplerConfig& cfg,
                       const Eigen::MatrixXd* truth = nullptr, double data_range = 2.0,
                       int field_h = 0, int field_w = 0);

}  // namespace bridgeflow
