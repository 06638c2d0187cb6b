// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "bridgeflow/path.hpp"

namespace bridgeflow {

/// Monte Carlo moment comparison at one path time.
struct MomentCheckpoint {
  double t = 0.0;                  // snapped to the integration grid
  Eigen::VectorXd mean;            // empirical state mean
  Eigen::VectorXd mean_expected;   // t z1 + (1-t) z0
  Eigen::VectorXd mean_se;         // per-coordinate standard error
  double var = 0.0;                // per-coordinate variance, averaged
  double var_expected = 0.0;       // path variance sigma_min^2 + sigma^2 t(1-t)
  double var_se = 0.0;
  double mt_var = 0.0;             // variance of the tracked stochastic term
  double mt_var_expected = 0.0;    // (1-t) t sigma^2 + sigma_min^2 t (2-t)
  double mt_var_se = 0.0;
};

struct SdeMomentReport {
  std::vector<MomentCheckpoint> checkpoints;
  std::vector<MomentCheckpoint> limit_points;
  double limit_estimate = 0.0;  // Var extrapolated linearly to t = 1
  double limit_expected = 0.0;  // sigma_min^2
  bool has_limit = false;
  std::size_t paths = 0;
  double dt = 0.0;
};

/// Euler-Maruyama check of the linear-SDE moments: integrates
/// dZ = [-Z/(1-t) + z1/(1-t)] dt + sqrt(sigma^2 + 2 sigma_min^2/(1-t)) dW
/// from Z_0 = z0, recording mean/variance at each checkpoint and the variance
/// of the stochastic-integral term M_t (tracked alongside with the same
/// Brownian increments).  With two or more `limit_ts`, extrapolates Var(M_t)
/// linearly to t = 1 for comparison against sigma_min^2.  Path p uses
/// derive_seed(seed, p).  Requires dt <= 1e-3 and dt <= (1 - max t)/100.
SdeMomentReport sde_moment_check(double sigma_min, double sigma, const Eigen::VectorXd& z0,
                                 const Eigen::VectorXd& z1, const std::vector<double>& checkpoints,
                                 std::size_t paths, double dt, std::uint64_t seed,
                                 const std::vector<double>& limit_ts = {});

/// Same report for the alternative SDE dZ = (z1 - z0) dt + c'(t) xi dt with
/// Z_0 = z0 + sigma_min xi: the per-path noise xi is shared between the start
/// and the diffusion term, which reproduces the path's marginals exactly
/// (an independent-increment reading would not).  The tracked term here is
/// the deviation from the deterministic drift path, with variance c_t^2.
SdeMomentReport alt_sde_check(double sigma_min, double sigma, const Eigen::VectorXd& z0,
                              const Eigen::VectorXd& z1, const std::vector<double>& checkpoints,
                              std::size_t paths, double dt, std::uint64_t seed,
                              const std::vector<double>& limit_ts = {});

/// Trace-variance comparison at one path time.
struct VariancePoint {
  double t = 0.0;
  double var_u = 0.0;  // MC trace variance of u = z1 - z0 + c' xi
  double var_u_se = 0.0;
  double var_u_closed = 0.0;  // 2 v (1 - rho) + c'^2, per coordinate x dim
  double var_ot = 0.0;        // MC trace variance of u~ = z0 - eta
  double var_ot_se = 0.0;
  double var_ot_closed = 0.0;  // v + 1, per coordinate x dim
  std::string verdict;         // bridge_lower | ot_lower | inconclusive (5-SE band)
};

struct VarianceReport {
  std::vector<VariancePoint> points;
  double cond_lhs = 0.0;  // rho v   (Cov(z0, z1) = rho v I)
  double cond_rhs = 0.0;  // ((sigma^4/(4 sigma_min^2) - 1) + v) / 2
  bool condition_holds = false;
  std::size_t samples = 0;
  int dim = 0;
  double rho = 0.0;
  double marginal_var = 0.0;
  double sigma_min = 0.0;
  double sigma = 0.0;
};

/// Compares the variance of the bridge-path vector field against the
/// rectified-flow one on consecutive draws (z^{tau-1}, z^tau) from a
/// stationary AR(1) with correlation rho and per-coordinate variance v.
/// Reports both sides of the sufficient condition
/// Cov >= ((sigma^4/(4 sigma_min^2) - 1) I + Var(z^tau)) / 2 (all matrices
/// are multiples of I here, so scalars suffice) and per-t MC trace variances
/// with closed forms.  Requires |rho| < 1, sigma_min > 0.
VarianceReport vf_variance_compare(double rho, double marginal_var, double sigma_min,
                                   double sigma, const std::vector<double>& ts, int dim,
                                   std::size_t samples, std::uint64_t seed);

/// Finite-difference grid for the continuity-equation residual: nz z-points
/// by nt t-points on [t_lo, t_hi], z spanning mean +- 4.5 c over the window.
struct ContinuityGrid {
  int nz = 401;
  int nt = 101;
  double t_lo = 0.0;
  double t_hi = 1.0;
};

/// Per-schedule default grids, sized so the residual resolves c(t)
/// (schedules whose c vanishes toward an endpoint get a clipped window).
ContinuityGrid default_continuity_grid(PathKind kind);

/// Max relative residual of d/dt p + d/dz (p u) for the scalar-latent
/// Gaussian path between z0 and z1, by central differences on interior
/// nodes; the scale is max |d/dt p|.  Requires dz <= min c / 10
/// ("grid too coarse" otherwise) and t_lo < t_hi inside the schedule's
/// singularity-free range.
double continuity_residual(const PathSchedule& schedule, double z0, double z1,
                           const ContinuityGrid& grid);

/// L2 error between RK4 integration of the conditional vector field from
/// psi_{t0}(xi) and the closed-form flow map psi_{t1}(xi).
double flow_map_error(const PathSchedule& schedule, const ConditionPair& pair,
                      const Eigen::VectorXd& xi, double t0, double t1, int steps);

}  // namespace bridgeflow
