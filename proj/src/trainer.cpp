// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace bridgeflow {
namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kDivergenceGuard = 1e6;
constexpr std::uint64_t kInitStream = 1000003;

double score_flow_weight(const PathSchedule& schedule, double t) {
  if (schedule.kind() != PathKind::vp)
    throw std::invalid_argument("score_flow weighting requires the vp schedule");
  const double beta_min = schedule.param("beta_min");
  const double beta_max = schedule.param("beta_max");
  return beta_min + (1.0 - t) * (beta_max - beta_min);
}

}  // namespace

LossWeighting weighting_from_name(const std::string& name) {
  if (name == "none") return LossWeighting::none;
  if (name == "score_flow") return LossWeighting::score_flow;
  throw std::invalid_argument("unknown loss weighting: '" + name + "'");
}

std::string weighting_name(LossWeighting weighting) {
  switch (weighting) {
    case LossWeighting::none: return "none";
    case LossWeighting::score_flow: return "score_flow";
  }
  throw std::logic_error("unreachable weighting");
}

TrainConfig TrainConfig::from_config(const Config& cfg, const std::string& table) {
  TrainConfig tc;
  tc.iterations = cfg.integer_or(table + ".iterations", tc.iterations);
  tc.batch = static_cast<int>(cfg.integer_or(table + ".batch", tc.batch));
  tc.lr = cfg.number_or(table + ".lr", tc.lr);
  tc.warmup_frac = cfg.number_or(table + ".warmup_frac", tc.warmup_frac);
  tc.seed = static_cast<std::uint64_t>(cfg.integer_or(table + ".seed", 0));
  tc.target = target_from_name(cfg.str_or(table + ".target", target_name(tc.target)));
  tc.weighting = weighting_from_name(cfg.str_or(table + ".weighting", weighting_name(tc.weighting)));
  tc.checkpoint_every = cfg.integer_or(table + ".checkpoint_every", tc.checkpoint_every);
  tc.validate();
  return tc;
}

void TrainConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("train: iterations must be >= 0");
  if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 0.5))
    throw std::invalid_argument("train: warmup_frac must lie in [0, 0.5]");
  if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be >= 0");
  if (weighting == LossWeighting::score_flow && target != TargetKind::score)
    throw std::invalid_argument("train: score_flow weighting requires target = score");
}

void TrainTrace::to_csv(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("trace: cannot write " + file.string());
  out << "iteration,epoch,loss,lr,wall_ms\n";
  char buf[160];
  for (std::size_t i = 0; i < loss.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.3f\n", i, epoch[i], loss[i], lr[i],
                  wall_ms[i]);
    out << buf;
  }
}

double lr_at(const TrainConfig& cfg, long long iter) {
  const long long total = cfg.iterations;
  if (total <= 0 || iter < 0 || iter >= total) return 0.0;
  const long long warmup = std::llround(cfg.warmup_frac * static_cast<double>(total));
  if (iter < warmup) return cfg.lr * static_cast<double>(iter) / static_cast<double>(warmup);
  const double span = static_cast<double>(total - warmup);
  const double progress = span > 0.0 ? static_cast<double>(iter - warmup) / span : 0.0;
  return cfg.lr * 0.5 * (1.0 + std::cos(kPi * progress));
}

BatchItem sample_cfm_item(const Eigen::MatrixXd& latents, const PathSchedule& schedule,
                          TargetKind target, LossWeighting weighting, Rng& rng) {
  const int m = static_cast<int>(latents.rows());
  if (m < 3) throw std::invalid_argument("sample_cfm_item: trajectory too short (need m >= 3)");

  const int tau = static_cast<int>(rng.uniform_int(3, m));  // 1-based target index
  ConditionPair pair(latents.row(tau - 2).transpose(), latents.row(tau - 1).transpose());
  const double t = rng.uniform(schedule.t_lo(), schedule.t_hi());
  const PathPoint pt = sample_point(schedule, pair, t, rng);
  const int c = static_cast<int>(rng.uniform_int(1, tau - 2));  // condition index

  BatchItem item;
  item.z = pt.z;
  item.z_ref = pair.z0;
  item.z_cond = latents.row(c - 1).transpose();
  item.t = t;
  item.gap = static_cast<double>(tau - c);
  item.target = regression_target(schedule, pair, pt, target);
  item.weight = weighting == LossWeighting::score_flow ? score_flow_weight(schedule, t) : 1.0;
  return item;
}

std::pair<double, Eigen::VectorXd> cfm_step(const VectorFieldModel& model,
                                            const LinearCodec& codec, const Trajectory& traj,
                                            const PathSchedule& schedule, TargetKind target,
                                            Rng& rng) {
  traj.validate();
  const Eigen::MatrixXd latents = codec.encode_rows(traj.states);
  const BatchItem item = sample_cfm_item(latents, schedule, target, LossWeighting::none, rng);
  Eigen::VectorXd grad;
  const double loss = model.loss_and_grad({item}, grad);
  return {loss, std::move(grad)};
}

TrainTrace train(VectorFieldModel& model, const TrainConfig& cfg, const Dataset& dataset,
                 const LinearCodec& codec, const PathSchedule& schedule,
                 const std::filesystem::path& checkpoint_dir) {
  cfg.validate();
  if (dataset.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (codec.data_dim() != dataset.dim())
    throw std::invalid_argument("train: codec dimension does not match dataset");
  if (codec.latent_dim() != model.config().latent_dim)
    throw std::invalid_argument("train: model latent dimension does not match codec");

  std::vector<Eigen::MatrixXd> latents;
  latents.reserve(dataset.normalized.size());
  for (const Eigen::MatrixXd& states : dataset.normalized)
    latents.push_back(codec.encode_rows(states));

  model.init_params(derive_seed(cfg.seed, kInitStream));

  TrainTrace trace;
  trace.seed = cfg.seed;
  Eigen::VectorXd grad, m1 = Eigen::VectorXd::Zero(model.params().size()),
                        m2 = Eigen::VectorXd::Zero(model.params().size());
  std::vector<BatchItem> batch(cfg.batch);
  const double traj_count = static_cast<double>(dataset.size());

  for (long long iter = 0; iter < cfg.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int e = 0; e < cfg.batch; ++e) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(iter) * cfg.batch + e));
      const auto traj = static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1));
      batch[e] = sample_cfm_item(latents[traj], schedule, cfg.target, cfg.weighting, rng);
    }
    const double loss = model.loss_and_grad(batch, grad);
    if (!std::isfinite(loss) || loss > kDivergenceGuard)
      throw std::runtime_error("train: loss diverged at iteration " + std::to_string(iter));

    const double lr = lr_at(cfg, iter);
    m1 = kAdamBeta1 * m1 + (1.0 - kAdamBeta1) * grad;
    m2 = kAdamBeta2 * m2 + (1.0 - kAdamBeta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(iter + 1));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(iter + 1));
    const Eigen::VectorXd step =
        ((m1 / bc1).array() / ((m2 / bc2).array().sqrt() + kAdamEps)).matrix();
    model.set_params(model.params() - lr * step);

    const auto t1 = std::chrono::steady_clock::now();
    trace.loss.push_back(loss);
    trace.lr.push_back(lr);
    trace.epoch.push_back(static_cast<double>(iter + 1) / traj_count);
    trace.wall_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

    if (cfg.checkpoint_every > 0 && !checkpoint_dir.empty() &&
        (iter + 1) % cfg.checkpoint_every == 0)
      model.save(checkpoint_dir, "checkpoint_" + std::to_string(iter + 1));
  }

  trace.final_params = model.params();
  return trace;
}

double zero_model_baseline(const Dataset& dataset, const LinearCodec& codec,
                           const PathSchedule& schedule, TargetKind target, std::uint64_t seed,
                           std::size_t samples) {
  if (dataset.size() == 0) throw std::invalid_argument("baseline: empty dataset");
  if (samples == 0) throw std::invalid_argument("baseline: need samples >= 1");
  std::vector<Eigen::MatrixXd> latents;
  latents.reserve(dataset.normalized.size());
  for (const Eigen::MatrixXd& states : dataset.normalized)
    latents.push_back(codec.encode_rows(states));

  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, s));
    const auto traj = static_cast<std::size_t>(rng.uniform_int(0, dataset.size() - 1));
    const BatchItem item =
        sample_cfm_item(latents[traj], schedule, target, LossWeighting::none, rng);
    total += item.target.squaredNorm();
  }
  return total / static_cast<double>(samples);
}

}  // namespace bridgeflow
