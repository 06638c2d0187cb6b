// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <map>
#include <stdexcept>
#include <string>

#include "bridgeflow/config.hpp"
#include "bridgeflow/rng.hpp"

namespace bridgeflow {

/// Thrown when an operation needs c(t) > 0 but the schedule is singular at t.
/// The fix on the caller's side is a positive noise floor (sigma_min > 0) or
/// staying inside the schedule's regular time range.
class SingularScheduleError : public std::runtime_error {
 public:
  explicit SingularScheduleError(const std::string& what) : std::runtime_error(what) {}
};

/// Built-in Gaussian path families.
enum class PathKind { bridge, ot, ve, vp, stochastic_interpolant };

/// What the regression head is trained to predict.
enum class TargetKind { flow, score, noise };

TargetKind target_from_name(const std::string& name);
std::string target_name(TargetKind kind);

/// Schedule coefficients and their time derivatives at one t.
struct ScheduleValues {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double da = 0.0;
  double db = 0.0;
  double dc = 0.0;
};

/// A Gaussian conditional probability path
///
///   p_t(z | z0, z1) = N(a(t) z0 + b(t) z1, c(t)^2 I),   t in [0, 1].
///
/// Five families are built in:
///
///   bridge                   a=1-t, b=t,  c^2 = sigma_min^2 + sigma^2 t(1-t)
///   ot                       a=0,   b=t,  c = 1 - (1 - eps_min) t
///   ve                       a=1,   b=0,  c = sigma_min sqrt((sigma_max/sigma_min)^{2(1-t)} - 1)
///   vp                       a=e^{-T(1-t)/2}, b=0, c^2 = 1 - e^{-T(1-t)},
///                            T(s) = s beta_min + s^2 (beta_max - beta_min)/2
///   stochastic_interpolant   a=1-t, b=t^b_power, c = eps (1-t) sqrt(t)
class PathSchedule {
 public:
  /// Builds a named schedule from its constants.  Required parameters:
  ///   bridge: sigma_min >= 0, sigma >= 0 (not both zero unless
  ///           allow_degenerate, which enables the deterministic test mode)
  ///   ot:     0 <= eps_min < 1
  ///   ve:     sigma_min > 0, sigma_max > sigma_min
  ///   vp:     beta_min > 0, beta_max >= beta_min
  ///   stochastic_interpolant: eps > 0; optional b_power in {1, 2} (default 2)
  /// Unknown or missing parameters raise std::invalid_argument.
  static PathSchedule make(PathKind kind, const std::map<std::string, double>& params,
                           bool allow_degenerate = false);

  /// Reads `<table>.kind` plus the kind's constants from a config block, e.g.
  /// `path = { kind = "bridge", sigma_min = 0.001, sigma = 0.01 }`.
  static PathSchedule from_config(const Config& cfg, const std::string& table = "path");

  static PathKind kind_from_name(const std::string& name);
  static std::string kind_name(PathKind kind);

  PathKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  double param(const std::string& key) const;
  const std::map<std::string, double>& params() const { return params_; }

  double a(double t) const { return at(t).a; }
  double b(double t) const { return at(t).b; }
  double c(double t) const { return at(t).c; }
  double da(double t) const { return at(t).da; }
  double db(double t) const { return at(t).db; }
  double dc(double t) const { return at(t).dc; }

  /// All six coefficients at once (the hot path during training).
  ScheduleValues at(double t) const;

  /// Closed interval from which training times are drawn; excludes the
  /// structural c=0 endpoints of ve/vp (t=1) and stochastic_interpolant
  /// (t=0 and t=1).
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }

 private:
  PathSchedule() = default;

  PathKind kind_ = PathKind::bridge;
  std::string name_;
  std::map<std::string, double> params_;
  double t_lo_ = 0.0;
  double t_hi_ = 1.0;
};

/// The conditioning pair (z0, z1): in training z0 is the reference element
/// z^{tau-1} and z1 the target element z^tau.
struct ConditionPair {
  Eigen::VectorXd z0;
  Eigen::VectorXd z1;

  ConditionPair(Eigen::VectorXd z0_in, Eigen::VectorXd z1_in);
};

/// One draw from the conditional path.  Invariant (by construction):
/// z = a(t) z0 + b(t) z1 + c(t) xi.
struct PathPoint {
  double t = 0.0;
  Eigen::VectorXd z;
  Eigen::VectorXd xi;
};

struct PathMoments {
  Eigen::VectorXd mean;
  double stddev = 0.0;
};

/// Mean and standard deviation of p_t(. | pair).  t outside [0,1] throws.
PathMoments path_moments(const PathSchedule& s, const ConditionPair& pair, double t);

/// Draws z = mean + c(t) xi with xi standard normal of the pair's dimension.
PathPoint sample_point(const PathSchedule& s, const ConditionPair& pair, double t, Rng& rng);

/// The conditional vector field
///   u_t(z) = (dc/c)(z - (a z0 + b z1)) + da z0 + db z1.
/// Throws SingularScheduleError when c(t) = 0.
Eigen::VectorXd conditional_vf(const PathSchedule& s, const ConditionPair& pair, double t,
                               const Eigen::VectorXd& z);

/// Regression target for the chosen parametrization:
///   flow  -> conditional_vf(pt.z)
///   score -> (mean - z)/c^2   (equals -xi/c for a sampled point)
///   noise -> (z - mean)/c     (equals xi exactly for a sampled point)
Eigen::VectorXd regression_target(const PathSchedule& s, const ConditionPair& pair,
                                  const PathPoint& pt, TargetKind kind);

}  // namespace bridgeflow
