// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bridgeflow/config.hpp"

namespace bridgeflow {

enum class SystemKind { damped_oscillator, lorenz63, heat1d, heat2d };

/// A small dynamical system together with its initial-condition distribution.
/// Oscillator: x'' = -omega^2 x - 2 zeta omega x', state (x, x'); the initial
/// condition is x = A cos(phi), x' = -A omega sin(phi) with A ~ U[amp_lo,
/// amp_hi], phi ~ U[phase_lo, phase_hi).  Lorenz63: classic (sigma, rho, beta)
/// system from ic_center + ic_jitter * U[-1,1]^3.  Heat systems: explicit
/// finite-volume diffusion with zero-flux (Neumann) boundaries on [0,
/// length]^dim; initial field = ic_offset + ic_scale * random cosine modes.
struct SystemSpec {
  SystemKind kind = SystemKind::damped_oscillator;

  // damped_oscillator
  double omega = 1.0;
  double zeta = 0.1;
  double amp_lo = 0.5;
  double amp_hi = 1.5;
  double phase_lo = 0.0;
  double phase_hi = 6.283185307179586476925286766559;

  // lorenz63
  double lor_sigma = 10.0;
  double lor_rho = 28.0;
  double lor_beta = 8.0 / 3.0;
  double ic_center[3] = {1.0, 1.0, 1.0};
  double ic_jitter = 0.5;

  // heat1d / heat2d
  int grid = 16;
  double kappa = 0.05;
  double length = 1.0;
  int ic_modes = 3;
  double ic_scale = 1.0;
  double ic_offset = 0.0;

  static SystemSpec make(SystemKind kind);
  static SystemSpec from_config(const Config& cfg, const std::string& table = "system");
  static SystemKind kind_from_name(const std::string& name);

  std::string name() const;
  /// Flattened state dimension (2, 3, grid, or grid*grid).
  int dim() const;
  /// Checks grid size and the explicit-scheme stability bound
  /// (kappa dt / dx^2 <= 0.25 in 1D, <= 0.125 in 2D).  Throws on violation.
  void validate(double dt) const;

  /// Desk-scale corpus defaults (trajectory count, length, step).
  int default_count() const;
  int default_m() const;
  double default_dt() const;
};

/// A simulated trajectory: m states of dimension d at uniform dt spacing.
struct Trajectory {
  std::string system_id;
  double dt = 0.0;
  Eigen::VectorXd times;   // m entries, times[i] = i * dt
  Eigen::MatrixXd states;  // m x d, one state per row

  int m() const { return static_cast<int>(states.rows()); }
  int dim() const { return static_cast<int>(states.cols()); }
  /// m >= 3, finite entries, uniform spacing to 1e-12.
  void validate() const;
};

/// Integrates the system for m states at step dt, the initial condition drawn
/// from the spec's distribution under `seed`.  ODE systems use classic RK4;
/// heat systems use conservative forward-Euler finite volumes.
Trajectory simulate(const SystemSpec& spec, std::uint64_t seed, int m, double dt);

/// `count` independent trajectories; trajectory i uses derive_seed(base_seed, i).
std::vector<Trajectory> make_corpus(const SystemSpec& spec, int count, int m, double dt,
                                    std::uint64_t base_seed);

/// Tensor-file serialization: one states tensor per trajectory plus a
/// corpus.json listing system, count, m, d, dt.
void save_corpus(const std::vector<Trajectory>& trajs, const std::filesystem::path& dir);
std::vector<Trajectory> load_corpus(const std::filesystem::path& dir);

/// Per-channel train-set normalization: standardize (mean, std), then divide
/// by the max absolute standardized value so every channel lies in [-1, 1].
struct Normalization {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;   // floored at 1e-12
  Eigen::VectorXd max_abs;  // of standardized values, floored at 1e-12

  static Normalization fit(const std::vector<Trajectory>& trajs);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd invert(const Eigen::MatrixXd& y) const;
  Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
  Eigen::VectorXd invert_row(const Eigen::VectorXd& y) const;

  void save(const std::filesystem::path& dir) const;
  static Normalization load(const std::filesystem::path& dir);
};

/// Trajectories split into conditioning prefix x^{1..k} and target suffix
/// x^{k+1..k+l}, with the shared normalization fitted on the whole corpus.
struct Dataset {
  std::vector<Trajectory> trajs;            // raw
  std::vector<Eigen::MatrixXd> normalized;  // per trajectory, m x d
  Normalization norm;
  int k = 0;
  int l = 0;

  int size() const { return static_cast<int>(trajs.size()); }
  int dim() const { return trajs.empty() ? 0 : trajs.front().dim(); }
  /// Normalized conditioning prefix (k x d) of trajectory i.
  Eigen::MatrixXd prefix(int i) const;
  /// Normalized target suffix (l x d) of trajectory i.
  Eigen::MatrixXd suffix(int i) const;
};

/// Requires k >= 2 and k + l <= m for every trajectory.
Dataset build_dataset(std::vector<Trajectory> trajs, int k, int l);

}  // namespace bridgeflow
