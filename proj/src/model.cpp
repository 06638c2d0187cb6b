// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bridgeflow/rng.hpp"
#include "bridgeflow/tensorfile.hpp"

namespace bridgeflow {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<const RowMajorMatrix>;
using WeightGradMap = Eigen::Map<RowMajorMatrix>;

double act_value(Activation act, double x) {
  switch (act) {
    case Activation::softplus: return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::tanh: return std::tanh(x);
    case Activation::gelu: return 0.5 * x * std::erfc(-x * kInvSqrt2);
  }
  throw std::logic_error("unreachable activation");
}

double act_deriv(Activation act, double x) {
  switch (act) {
    case Activation::softplus: return 1.0 / (1.0 + std::exp(-x));
    case Activation::tanh: {
      const double y = std::tanh(x);
      return 1.0 - y * y;
    }
    case Activation::gelu:
      return 0.5 * std::erfc(-x * kInvSqrt2) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
  }
  throw std::logic_error("unreachable activation");
}

}  // namespace

Activation activation_from_name(const std::string& name) {
  if (name == "softplus") return Activation::softplus;
  if (name == "tanh") return Activation::tanh;
  if (name == "gelu") return Activation::gelu;
  throw std::invalid_argument("unknown activation: '" + name + "'");
}

std::string activation_name(Activation act) {
  switch (act) {
    case Activation::softplus: return "softplus";
    case Activation::tanh: return "tanh";
    case Activation::gelu: return "gelu";
  }
  throw std::logic_error("unreachable activation");
}

TimeEmbedding::TimeEmbedding(int dim, double period_min, double period_max) : dim_(dim) {
  if (dim < 2 || dim % 2 != 0)
    throw std::invalid_argument("time embedding: dim must be even and >= 2");
  if (!(period_min > 0.0) || !(period_max >= period_min))
    throw std::invalid_argument("time embedding: need 0 < period_min <= period_max");
  const int pairs = dim / 2;
  for (int j = 0; j < pairs; ++j) {
    const double frac = pairs == 1 ? 0.0 : static_cast<double>(j) / (pairs - 1);
    const double period = period_min * std::pow(period_max / period_min, frac);
    angular_.push_back(kTwoPi / period);
  }
}

Eigen::VectorXd TimeEmbedding::operator()(double x) const {
  Eigen::VectorXd out(dim_);
  fill(x, out.data());
  return out;
}

void TimeEmbedding::fill(double x, double* out) const {
  for (std::size_t j = 0; j < angular_.size(); ++j) {
    out[2 * j] = std::sin(angular_[j] * x);
    out[2 * j + 1] = std::cos(angular_[j] * x);
  }
}

ModelConfig ModelConfig::from_config(const Config& cfg, int latent_dim,
                                     const std::string& table) {
  ModelConfig mc;
  mc.latent_dim = latent_dim;
  mc.width = static_cast<int>(cfg.integer_or(table + ".width", mc.width));
  mc.depth = static_cast<int>(cfg.integer_or(table + ".depth", mc.depth));
  mc.embed_dim = static_cast<int>(cfg.integer_or(table + ".embed_dim", mc.embed_dim));
  mc.act = activation_from_name(cfg.str_or(table + ".activation", activation_name(mc.act)));
  mc.t_period_min = cfg.number_or(table + ".t_period_min", mc.t_period_min);
  mc.t_period_max = cfg.number_or(table + ".t_period_max", mc.t_period_max);
  mc.gap_period_min = cfg.number_or(table + ".gap_period_min", mc.gap_period_min);
  mc.gap_period_max = cfg.number_or(table + ".gap_period_max", mc.gap_period_max);
  mc.init_output_scale = cfg.number_or(table + ".init_output_scale", mc.init_output_scale);
  mc.validate();
  return mc;
}

void ModelConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("model: latent_dim must be >= 1");
  if (depth < 0) throw std::invalid_argument("model: depth must be >= 0");
  if (depth > 0 && width < 1) throw std::invalid_argument("model: width must be >= 1");
  if (embed_dim < 2 || embed_dim % 2 != 0)
    throw std::invalid_argument("model: embed_dim must be even and >= 2");
  if (!(init_output_scale > 0.0))
    throw std::invalid_argument("model: init_output_scale must be > 0");
}

VectorFieldModel::VectorFieldModel(ModelConfig cfg)
    : cfg_(cfg),
      t_embed_(cfg.embed_dim, cfg.t_period_min, cfg.t_period_max),
      gap_embed_(cfg.embed_dim, cfg.gap_period_min, cfg.gap_period_max) {
  cfg_.validate();
  int in = cfg_.input_dim();
  for (int i = 0; i < cfg_.depth; ++i) {
    layer_in_.push_back(in);
    layer_out_.push_back(cfg_.width);
    in = cfg_.width;
  }
  layer_in_.push_back(in);
  layer_out_.push_back(cfg_.latent_dim);

  std::size_t offset = 0;
  for (std::size_t i = 0; i < layer_in_.size(); ++i) {
    w_off_.push_back(offset);
    offset += static_cast<std::size_t>(layer_in_[i]) * layer_out_[i];
    b_off_.push_back(offset);
    offset += layer_out_[i];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

void VectorFieldModel::set_params(const Eigen::VectorXd& params) {
  if (params.size() != params_.size())
    throw std::invalid_argument("model: expected " + std::to_string(params_.size()) +
                                " parameters, got " + std::to_string(params.size()));
  if (!params.allFinite()) throw std::invalid_argument("model: non-finite parameters");
  params_ = params;
}

void VectorFieldModel::init_params(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t layer = 0; layer < layer_in_.size(); ++layer) {
    const double bound = std::sqrt(3.0 / layer_in_[layer]);
    const double scale = layer + 1 == layer_in_.size() ? cfg_.init_output_scale : 1.0;
    const std::size_t count = static_cast<std::size_t>(layer_in_[layer]) * layer_out_[layer];
    for (std::size_t i = 0; i < count; ++i)
      params_(static_cast<Eigen::Index>(w_off_[layer] + i)) =
          scale * rng.uniform(-bound, bound);
    for (int i = 0; i < layer_out_[layer]; ++i)
      params_(static_cast<Eigen::Index>(b_off_[layer] + i)) = 0.0;
  }
}

Eigen::VectorXd VectorFieldModel::assemble_input(const Eigen::VectorXd& z,
                                                 const Eigen::VectorXd& z_ref,
                                                 const Eigen::VectorXd& z_cond, double gap,
                                                 double t) const {
  const int p = cfg_.latent_dim;
  if (z.size() != p || z_ref.size() != p || z_cond.size() != p)
    throw std::invalid_argument("model forward: latent inputs must have dimension " +
                                std::to_string(p));
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("model forward: t must lie in [0, 1]");
  if (!(gap >= 1.0)) throw std::domain_error("model forward: gap must be >= 1");
  Eigen::VectorXd input(cfg_.input_dim());
  input.segment(0, p) = z;
  input.segment(p, p) = z_ref;
  input.segment(2 * p, p) = z_cond;
  t_embed_.fill(t, input.data() + 3 * p);
  gap_embed_.fill(gap, input.data() + 3 * p + cfg_.embed_dim);
  return input;
}

Eigen::VectorXd VectorFieldModel::forward(const Eigen::VectorXd& z, const Eigen::VectorXd& z_ref,
                                          const Eigen::VectorXd& z_cond, double gap,
                                          double t) const {
  Eigen::VectorXd x = assemble_input(z, z_ref, z_cond, gap, t);
  const std::size_t layers = layer_in_.size();
  for (std::size_t i = 0; i < layers; ++i) {
    const WeightMap w(params_.data() + w_off_[i], layer_out_[i], layer_in_[i]);
    const Eigen::Map<const Eigen::VectorXd> b(params_.data() + b_off_[i], layer_out_[i]);
    Eigen::VectorXd pre = w * x + b;
    if (i + 1 < layers)
      for (Eigen::Index j = 0; j < pre.size(); ++j) pre(j) = act_value(cfg_.act, pre(j));
    x = std::move(pre);
  }
  return x;
}

double VectorFieldModel::loss_and_grad(const std::vector<BatchItem>& batch,
                                       Eigen::VectorXd& grad) const {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  grad = Eigen::VectorXd::Zero(params_.size());
  const std::size_t layers = layer_in_.size();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;

  std::vector<Eigen::VectorXd> inputs(layers);  // input to each layer
  std::vector<Eigen::VectorXd> pres(layers);    // pre-activation of each layer
  for (const BatchItem& item : batch) {
    if (!item.target.allFinite())
      throw std::invalid_argument("loss_and_grad: non-finite target");
    if (item.target.size() != cfg_.latent_dim)
      throw std::invalid_argument("loss_and_grad: target dimension mismatch");

    Eigen::VectorXd x = assemble_input(item.z, item.z_ref, item.z_cond, item.gap, item.t);
    for (std::size_t i = 0; i < layers; ++i) {
      const WeightMap w(params_.data() + w_off_[i], layer_out_[i], layer_in_[i]);
      const Eigen::Map<const Eigen::VectorXd> b(params_.data() + b_off_[i], layer_out_[i]);
      inputs[i] = std::move(x);
      pres[i] = w * inputs[i] + b;
      x = pres[i];
      if (i + 1 < layers)
        for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = act_value(cfg_.act, x(j));
    }

    if (!(item.weight > 0.0) || !std::isfinite(item.weight))
      throw std::invalid_argument("loss_and_grad: weight must be positive and finite");
    const Eigen::VectorXd residual = x - item.target;
    loss += item.weight * residual.squaredNorm() * inv_batch;

    Eigen::VectorXd delta = (2.0 * item.weight * inv_batch) * residual;
    for (std::size_t idx = layers; idx-- > 0;) {
      if (idx + 1 < layers)  // apply the activation derivative of this hidden layer
        for (Eigen::Index j = 0; j < delta.size(); ++j)
          delta(j) *= act_deriv(cfg_.act, pres[idx](j));
      WeightGradMap wg(grad.data() + w_off_[idx], layer_out_[idx], layer_in_[idx]);
      Eigen::Map<Eigen::VectorXd> bg(grad.data() + b_off_[idx], layer_out_[idx]);
      wg.noalias() += delta * inputs[idx].transpose();
      bg += delta;
      if (idx > 0) {
        const WeightMap w(params_.data() + w_off_[idx], layer_out_[idx], layer_in_[idx]);
        delta = w.transpose() * delta;
      }
    }
  }
  return loss;
}

void VectorFieldModel::save(const std::filesystem::path& dir, const std::string& stem) const {
  std::filesystem::create_directories(dir);
  write_vector(dir / (stem + "_params"), stem + "_params", params_);
  nlohmann::json meta;
  meta["latent_dim"] = cfg_.latent_dim;
  meta["width"] = cfg_.width;
  meta["depth"] = cfg_.depth;
  meta["embed_dim"] = cfg_.embed_dim;
  meta["activation"] = activation_name(cfg_.act);
  meta["t_period_min"] = cfg_.t_period_min;
  meta["t_period_max"] = cfg_.t_period_max;
  meta["gap_period_min"] = cfg_.gap_period_min;
  meta["gap_period_max"] = cfg_.gap_period_max;
  meta["init_output_scale"] = cfg_.init_output_scale;
  std::ofstream out(dir / (stem + "_meta.json"));
  out << meta.dump(2) << '\n';
  if (!out)
    throw std::runtime_error("model save: cannot write " +
                             (dir / (stem + "_meta.json")).string());
}

VectorFieldModel VectorFieldModel::load(const std::filesystem::path& dir,
                                        const std::string& stem) {
  std::ifstream in(dir / (stem + "_meta.json"));
  if (!in)
    throw std::runtime_error("model load: cannot open " +
                             (dir / (stem + "_meta.json")).string());
  nlohmann::json meta = nlohmann::json::parse(in);
  ModelConfig cfg;
  cfg.latent_dim = meta.at("latent_dim").get<int>();
  cfg.width = meta.at("width").get<int>();
  cfg.depth = meta.at("depth").get<int>();
  cfg.embed_dim = meta.at("embed_dim").get<int>();
  cfg.act = activation_from_name(meta.at("activation").get<std::string>());
  cfg.t_period_min = meta.at("t_period_min").get<double>();
  cfg.t_period_max = meta.at("t_period_max").get<double>();
  cfg.gap_period_min = meta.at("gap_period_min").get<double>();
  cfg.gap_period_max = meta.at("gap_period_max").get<double>();
  cfg.init_output_scale = meta.at("init_output_scale").get<double>();
  VectorFieldModel model(cfg);
  model.set_params(read_vector(dir / (stem + "_params")));
  return model;
}

}  // namespace bridgeflow
