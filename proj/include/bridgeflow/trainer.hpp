// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bridgeflow/codec.hpp"
#include "bridgeflow/config.hpp"
#include "bridgeflow/dynamics.hpp"
#include "bridgeflow/model.hpp"
#include "bridgeflow/path.hpp"
#include "bridgeflow/rng.hpp"

namespace bridgeflow {

/// Per-sample loss weight lambda(t) for the score parametrization:
/// `none` leaves the squared error unweighted; `score_flow` multiplies by
/// beta(1 - t) (vp-path beta ramp; requires a vp schedule and score target).
enum class LossWeighting { none, score_flow };

LossWeighting weighting_from_name(const std::string& name);
std::string weighting_name(LossWeighting weighting);

struct TrainConfig {
  long long iterations = 500;  // M; 0 is allowed and trains nothing
  int batch = 32;
  double lr = 1e-3;
  double warmup_frac = 0.05;  // fraction of M spent in linear warmup, in [0, 0.5]
  std::uint64_t seed = 0;
  TargetKind target = TargetKind::flow;
  LossWeighting weighting = LossWeighting::none;
  long long checkpoint_every = 0;  // 0 disables checkpoints

  /// Reads `<table>.{iterations,batch,lr,warmup_frac,seed,target,weighting,
  /// checkpoint_every}`, all optional, then validates.
  static TrainConfig from_config(const Config& cfg, const std::string& table = "train");
  void validate() const;
};

/// One record per iteration; `final_params` snapshots the model after the run.
struct TrainTrace {
  std::vector<double> loss;
  std::vector<double> lr;
  std::vector<double> epoch;    // iterations / trajectory count
  std::vector<double> wall_ms;  // per-iteration wall clock (informational)
  Eigen::VectorXd final_params;
  std::uint64_t seed = 0;

  std::size_t size() const { return loss.size(); }
  /// Columns: iteration,epoch,loss,lr,wall_ms.  wall_ms is the only
  /// non-deterministic column.
  void to_csv(const std::filesystem::path& file) const;
};

/// Learning rate at iteration `iter` of `cfg.iterations` total: linear ramp
/// from 0 to cfg.lr over round(warmup_frac * M) iterations, then cosine decay
/// reaching 0 at iteration M.
double lr_at(const TrainConfig& cfg, long long iter);

/// One training draw on an encoded trajectory (rows = latent snapshots z^1..z^m):
/// tau ~ U{3..m}, t ~ U[t_lo, t_hi], Z ~ p_t(.|z^{tau-1}, z^tau), c ~ U{1..tau-2};
/// the item conditions on (z^{tau-1}, z^c, tau-c).  Draw order is fixed
/// (tau, t, xi, c) so a seeded rng reproduces the item bit-for-bit.
BatchItem sample_cfm_item(const Eigen::MatrixXd& latents, const PathSchedule& schedule,
                          TargetKind target, LossWeighting weighting, Rng& rng);

/// Single-sample training step probe: encodes the trajectory's states and
/// returns the loss and parameter gradient of one draw.
std::pair<double, Eigen::VectorXd> cfm_step(const VectorFieldModel& model,
                                            const LinearCodec& codec, const Trajectory& traj,
                                            const PathSchedule& schedule, TargetKind target,
                                            Rng& rng);

/// Runs M iterations of batched training steps with Adam (beta 0.9/0.999,
/// eps 1e-8, no weight decay) under the warmup-cosine schedule.  The model is
/// initialized from derive_seed(cfg.seed, 1000003); batch element e of
/// iteration i draws from an rng seeded with derive_seed(cfg.seed, i*batch+e),
/// so results are independent of worker count.  Aborts if the loss exceeds
/// 1e6.  If `checkpoint_dir` is nonempty and cfg.checkpoint_every > 0, saves
/// the model as checkpoint_<iter> every K iterations.
TrainTrace train(VectorFieldModel& model, const TrainConfig& cfg, const Dataset& dataset,
                 const LinearCodec& codec, const PathSchedule& schedule,
                 const std::filesystem::path& checkpoint_dir = {});

/// Monte Carlo estimate of the loss of the identically-zero model,
/// E ||target||^2, over `samples` independent draws from the dataset.
double zero_model_baseline(const Dataset& dataset, const LinearCodec& codec,
                           const PathSchedule& schedule, TargetKind target, std::uint64_t seed,
                           std::size_t samples);

}  // namespace bridgeflow
