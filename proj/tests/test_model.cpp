// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bridgeflow/config.hpp"
#include "bridgeflow/model.hpp"
#include "bridgeflow/rng.hpp"

using namespace bridgeflow;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config(Activation act) {
  ModelConfig mc;
  mc.latent_dim = 3;
  mc.width = 8;
  mc.depth = 2;
  mc.act = act;
  mc.embed_dim = 4;
  return mc;
}

std::vector<BatchItem> make_batch(const ModelConfig& mc, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<BatchItem> batch;
  const std::vector<double> weights = {1.0, 0.7, 1.3};
  for (double w : weights) {
    BatchItem item;
    item.z = rng.normal_vector(mc.latent_dim);
    item.z_ref = rng.normal_vector(mc.latent_dim);
    item.z_cond = rng.normal_vector(mc.latent_dim);
    item.t = rng.uniform();
    item.gap = 1.0 + rng.uniform_int(0, 6);
    item.target = rng.normal_vector(mc.latent_dim);
    item.weight = w;
    batch.push_back(std::move(item));
  }
  return batch;
}

double batch_loss(const VectorFieldModel& model, const std::vector<BatchItem>& batch) {
  Eigen::VectorXd grad;
  return model.loss_and_grad(batch, grad);
}

}  // namespace

TEST_CASE("time embedding matches its sinusoid definition") {
  const int dim = 6;
  const double pmin = 0.1, pmax = 10.0;
  const TimeEmbedding embed(dim, pmin, pmax);
  CHECK(embed.dim() == dim);
  for (double x : {0.0, 0.37, 1.0, 4.0}) {
    const Eigen::VectorXd v = embed(x);
    REQUIRE(v.size() == dim);
    for (int j = 0; j < dim / 2; ++j) {
      const double period = pmin * std::pow(pmax / pmin, static_cast<double>(j) / (dim / 2 - 1));
      const double w = 2.0 * M_PI / period;
      CHECK(v(2 * j) == doctest::Approx(std::sin(w * x)).epsilon(1e-12));
      CHECK(v(2 * j + 1) == doctest::Approx(std::cos(w * x)).epsilon(1e-12));
    }
    // Each (sin, cos) pair contributes exactly 1 to the squared norm.
    CHECK(v.squaredNorm() == doctest::Approx(dim / 2.0).epsilon(1e-12));
    Eigen::VectorXd filled(dim);
    embed.fill(x, filled.data());
    CHECK((filled - v).norm() == 0.0);
  }
}

TEST_CASE("single-pair embedding uses the minimum period") {
  const TimeEmbedding embed(2, 0.5, 99.0);
  const double w = 2.0 * M_PI / 0.5;
  CHECK(embed(0.2)(0) == doctest::Approx(std::sin(w * 0.2)).epsilon(1e-12));
}

TEST_CASE("time embedding rejects bad dimensions and periods") {
  CHECK_THROWS_AS(TimeEmbedding(0, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeEmbedding(3, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeEmbedding(4, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeEmbedding(4, 2.0, 1.0), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central finite differences for every parameter") {
  for (Activation act : {Activation::softplus, Activation::tanh, Activation::gelu}) {
    CAPTURE(activation_name(act));
    VectorFieldModel model(small_config(act));
    model.init_params(42);
    const auto batch = make_batch(model.config(), 43);

    Eigen::VectorXd grad;
    model.loss_and_grad(batch, grad);
    REQUIRE(grad.size() == static_cast<Eigen::Index>(model.param_count()));

    const double h = 1e-5;
    Eigen::VectorXd params = model.params();
    VectorFieldModel probe(small_config(act));
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      Eigen::VectorXd bumped = params;
      bumped(i) = params(i) + h;
      probe.set_params(bumped);
      const double up = batch_loss(probe, batch);
      bumped(i) = params(i) - h;
      probe.set_params(bumped);
      const double down = batch_loss(probe, batch);
      const double fd = (up - down) / (2.0 * h);
      const double scale = std::max(std::abs(grad(i)), std::abs(fd));
      CAPTURE(i);
      CHECK(std::abs(grad(i) - fd) <= 1e-9 + 1e-5 * scale);
    }
  }
}

TEST_CASE("parameter initialization respects fan-in bounds and zero biases") {
  ModelConfig mc = small_config(Activation::softplus);
  VectorFieldModel model(mc);
  model.init_params(7);
  const Eigen::VectorXd& p = model.params();
  REQUIRE(p.allFinite());

  // Layout: layer by layer, weights (row-major) before biases.
  const int in0 = mc.input_dim();
  const std::vector<int> fan_in = {in0, mc.width, mc.width};
  const std::vector<int> fan_out = {mc.width, mc.width, mc.latent_dim};
  std::size_t off = 0;
  for (std::size_t layer = 0; layer < 3; ++layer) {
    const double bound = std::sqrt(3.0 / fan_in[layer]);
    const double scale = layer == 2 ? mc.init_output_scale : 1.0;
    const std::size_t nw = static_cast<std::size_t>(fan_in[layer]) * fan_out[layer];
    double max_abs = 0.0;
    for (std::size_t i = 0; i < nw; ++i)
      max_abs = std::max(max_abs, std::abs(p(static_cast<Eigen::Index>(off + i))));
    CHECK(max_abs <= scale * bound);
    CHECK(max_abs > 0.5 * scale * bound);  // 192+ uniform draws: max is near the bound
    off += nw;
    for (int i = 0; i < fan_out[layer]; ++i)
      CHECK(p(static_cast<Eigen::Index>(off + i)) == 0.0);
    off += static_cast<std::size_t>(fan_out[layer]);
  }
  CHECK(off == model.param_count());

  VectorFieldModel again(mc);
  again.init_params(7);
  CHECK((again.params().array() == p.array()).all());
  VectorFieldModel other(mc);
  other.init_params(8);
  CHECK((other.params() - p).norm() > 0.0);
}

TEST_CASE("parameter count follows the dense layer layout") {
  const ModelConfig mc = small_config(Activation::tanh);
  const int in = mc.input_dim();
  CHECK(in == 3 * 3 + 2 * 4);
  const std::size_t expect = static_cast<std::size_t>(in * 8 + 8) + (8 * 8 + 8) + (8 * 3 + 3);
  CHECK(VectorFieldModel(mc).param_count() == expect);
}

TEST_CASE("depth zero is an affine map with the documented layout") {
  ModelConfig mc;
  mc.latent_dim = 2;
  mc.depth = 0;
  mc.embed_dim = 4;
  VectorFieldModel model(mc);
  model.init_params(11);

  Rng rng(12);
  const Eigen::VectorXd z = rng.normal_vector(2), z_ref = rng.normal_vector(2),
                        z_cond = rng.normal_vector(2);
  const double t = 0.4, gap = 3.0;

  const int in = mc.input_dim();
  Eigen::VectorXd input(in);
  input.segment(0, 2) = z;
  input.segment(2, 2) = z_ref;
  input.segment(4, 2) = z_cond;
  const TimeEmbedding t_embed(mc.embed_dim, mc.t_period_min, mc.t_period_max);
  const TimeEmbedding gap_embed(mc.embed_dim, mc.gap_period_min, mc.gap_period_max);
  input.segment(6, 4) = t_embed(t);
  input.segment(10, 4) = gap_embed(gap);

  Eigen::MatrixXd w(2, in);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < in; ++c) w(r, c) = model.params()(r * in + c);
  const Eigen::VectorXd b = model.params().segment(2 * in, 2);

  const Eigen::VectorXd expect = w * input + b;
  CHECK((model.forward(z, z_ref, z_cond, gap, t) - expect).norm() < 1e-14);
}

TEST_CASE("loss matches a direct forward-pass computation") {
  VectorFieldModel model(small_config(Activation::gelu));
  model.init_params(21);
  const auto batch = make_batch(model.config(), 22);
  double manual = 0.0;
  for (const BatchItem& item : batch) {
    const Eigen::VectorXd out = model.forward(item.z, item.z_ref, item.z_cond, item.gap, item.t);
    manual += item.weight * (out - item.target).squaredNorm();
  }
  manual /= static_cast<double>(batch.size());
  Eigen::VectorXd grad;
  CHECK(model.loss_and_grad(batch, grad) == doctest::Approx(manual).epsilon(1e-13));
}

TEST_CASE("forward validates latent dimensions and scalar domains") {
  VectorFieldModel model(small_config(Activation::softplus));
  model.init_params(31);
  Rng rng(32);
  const Eigen::VectorXd ok = rng.normal_vector(3), bad = rng.normal_vector(4);
  CHECK_THROWS_AS(model.forward(bad, ok, ok, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(ok, bad, ok, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(ok, ok, bad, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(model.forward(ok, ok, ok, 1.0, -0.1), std::domain_error);
  CHECK_THROWS_AS(model.forward(ok, ok, ok, 1.0, 1.1), std::domain_error);
  CHECK_THROWS_AS(model.forward(ok, ok, ok, 0.5, 0.5), std::domain_error);
  CHECK_NOTHROW(model.forward(ok, ok, ok, 1.0, 0.0));
  CHECK_NOTHROW(model.forward(ok, ok, ok, 9.0, 1.0));
}

TEST_CASE("loss_and_grad validates batch contents") {
  VectorFieldModel model(small_config(Activation::softplus));
  model.init_params(41);
  Eigen::VectorXd grad;
  CHECK_THROWS_AS(model.loss_and_grad({}, grad), std::invalid_argument);

  auto batch = make_batch(model.config(), 42);
  batch[1].target = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(model.loss_and_grad(batch, grad), std::invalid_argument);
  batch = make_batch(model.config(), 42);
  batch[0].target(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(model.loss_and_grad(batch, grad), std::invalid_argument);
  batch = make_batch(model.config(), 42);
  batch[2].weight = 0.0;
  CHECK_THROWS_AS(model.loss_and_grad(batch, grad), std::invalid_argument);
  batch[2].weight = -1.0;
  CHECK_THROWS_AS(model.loss_and_grad(batch, grad), std::invalid_argument);
  batch[2].weight = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(model.loss_and_grad(batch, grad), std::invalid_argument);
}

TEST_CASE("set_params rejects wrong sizes and non-finite values") {
  VectorFieldModel model(small_config(Activation::tanh));
  CHECK_THROWS_AS(model.set_params(Eigen::VectorXd::Zero(3)), std::invalid_argument);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.param_count()));
  p(5) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(model.set_params(p), std::invalid_argument);
}

TEST_CASE("model save/load round-trip is bit exact") {
  const fs::path dir = fs::temp_directory_path() / "bridgeflow_test_model_rt";
  fs::remove_all(dir);
  fs::create_directories(dir);

  ModelConfig mc = small_config(Activation::gelu);
  mc.t_period_min = 0.25;
  mc.gap_period_max = 77.0;
  mc.init_output_scale = 0.05;
  VectorFieldModel model(mc);
  model.init_params(51);
  model.save(dir);

  const VectorFieldModel back = VectorFieldModel::load(dir);
  CHECK((back.params().array() == model.params().array()).all());
  CHECK(back.config().latent_dim == mc.latent_dim);
  CHECK(back.config().width == mc.width);
  CHECK(back.config().depth == mc.depth);
  CHECK(back.config().act == mc.act);
  CHECK(back.config().embed_dim == mc.embed_dim);
  CHECK(back.config().t_period_min == mc.t_period_min);
  CHECK(back.config().gap_period_max == mc.gap_period_max);
  CHECK(back.config().init_output_scale == mc.init_output_scale);

  Rng rng(52);
  const Eigen::VectorXd z = rng.normal_vector(3);
  CHECK((back.forward(z, z, z, 2.0, 0.3) - model.forward(z, z, z, 2.0, 0.3)).norm() == 0.0);
  CHECK_THROWS_AS(VectorFieldModel::load(dir / "missing"), std::runtime_error);
}

TEST_CASE("model config validation and parsing") {
  ModelConfig mc = small_config(Activation::softplus);
  mc.latent_dim = 0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = small_config(Activation::softplus);
  mc.depth = -1;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = small_config(Activation::softplus);
  mc.embed_dim = 5;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = small_config(Activation::softplus);
  mc.init_output_scale = 0.0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);

  const Config cfg = Config::parse_string(
      "model.width = 12\n"
      "model.depth = 1\n"
      "model.embed_dim = 6\n"
      "model.activation = \"tanh\"\n"
      "model.gap_period_max = 64\n");
  const ModelConfig parsed = ModelConfig::from_config(cfg, 4);
  CHECK(parsed.latent_dim == 4);
  CHECK(parsed.width == 12);
  CHECK(parsed.depth == 1);
  CHECK(parsed.embed_dim == 6);
  CHECK(parsed.act == Activation::tanh);
  CHECK(parsed.gap_period_max == 64.0);
  CHECK(parsed.t_period_min == 0.1);  // default preserved

  CHECK(activation_from_name("gelu") == Activation::gelu);
  CHECK(activation_name(Activation::softplus) == "softplus");
  CHECK_THROWS_AS(activation_from_name("relu6"), std::invalid_argument);
}
