// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bridgeflow/config.hpp"

namespace bridgeflow {

enum class Activation { softplus, tanh, gelu };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation act);

/// Fixed sinusoidal features of a scalar: dim/2 (sin, cos) pairs whose
/// periods form a geometric ladder from period_min to period_max.  The
/// embedding norm is sqrt(dim/2) <= sqrt(dim).
class TimeEmbedding {
 public:
  TimeEmbedding(int dim, double period_min, double period_max);

  int dim() const { return dim_; }
  Eigen::VectorXd operator()(double x) const;
  /// Writes dim() values into out (hot path; no allocation).
  void fill(double x, double* out) const;

 private:
  int dim_ = 0;
  std::vector<double> angular_;  // 2*pi / period per pair
};

/// Architecture of the learnable vector field v_t^theta.
struct ModelConfig {
  int latent_dim = 0;  // p
  int width = 128;     // hidden width
  int depth = 3;       // hidden layers (0 = single linear map)
  Activation act = Activation::softplus;
  int embed_dim = 16;  // per embedded scalar (t and gap)
  double t_period_min = 0.1;
  double t_period_max = 10.0;
  double gap_period_min = 2.0;
  double gap_period_max = 128.0;
  double init_output_scale = 0.01;  // keeps the initial VF near zero

  /// Reads width/depth/embed_dim/activation (and optionally the embedding
  /// periods and init_output_scale) from a `model` config table.
  static ModelConfig from_config(const Config& cfg, int latent_dim,
                                 const std::string& table = "model");

  /// Concatenated input: [z, z_ref, z_cond, embed(t), embed(gap)].
  int input_dim() const { return 3 * latent_dim + 2 * embed_dim; }
  void validate() const;
};

/// One training example for the regression loss.
struct BatchItem {
  Eigen::VectorXd z;       // noisy path sample
  Eigen::VectorXd z_ref;   // reference latent z^{tau-1}
  Eigen::VectorXd z_cond;  // conditioning latent z^c
  double t = 0.0;          // flow time in [0,1]
  double gap = 1.0;        // integer gap >= 1, embedded like t
  Eigen::VectorXd target;  // regression target
  double weight = 1.0;     // per-sample loss weight (lambda(t); 1 = unweighted)
};

/// Fully connected vector-field regressor with exact analytic gradients.
/// Parameters live in one flat vector laid out layer by layer, weights
/// (row-major) before biases.
class VectorFieldModel {
 public:
  explicit VectorFieldModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  const Eigen::VectorXd& params() const { return params_; }
  void set_params(const Eigen::VectorXd& params);

  /// Fan-in-scaled uniform initialization (U[-sqrt(3/fan_in), +sqrt(3/fan_in)]),
  /// with the output layer additionally scaled by init_output_scale.
  void init_params(std::uint64_t seed);

  Eigen::VectorXd forward(const Eigen::VectorXd& z, const Eigen::VectorXd& z_ref,
                          const Eigen::VectorXd& z_cond, double gap, double t) const;

  /// loss = (1/batch) sum ||forward(item) - item.target||^2; grad gets the
  /// exact analytic gradient (resized to param_count).
  double loss_and_grad(const std::vector<BatchItem>& batch, Eigen::VectorXd& grad) const;

  /// Checkpoint: `<stem>_params` tensor plus `<stem>_meta.json` layout header.
  void save(const std::filesystem::path& dir, const std::string& stem = "model") const;
  static VectorFieldModel load(const std::filesystem::path& dir,
                               const std::string& stem = "model");

 private:
  Eigen::VectorXd assemble_input(const Eigen::VectorXd& z, const Eigen::VectorXd& z_ref,
                                 const Eigen::VectorXd& z_cond, double gap, double t) const;

  ModelConfig cfg_;
  TimeEmbedding t_embed_;
  TimeEmbedding gap_embed_;
  std::vector<int> layer_in_, layer_out_;  // per layer
  std::vector<std::size_t> w_off_, b_off_;
  Eigen::VectorXd params_;
};

}  // namespace bridgeflow
