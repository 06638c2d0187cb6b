// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/path.hpp"

#include <cmath>
#include <set>

namespace bridgeflow {
namespace {

constexpr double kTimeClip = 1e-5;  // keeps training t away from structural c=0 endpoints

void check_params(const std::string& name, const std::map<std::string, double>& params,
                  const std::set<std::string>& required, const std::set<std::string>& optional) {
  for (const std::string& key : required)
    if (!params.count(key))
      throw std::invalid_argument("path '" + name + "': missing parameter '" + key + "'");
  for (const auto& [key, value] : params)
    if (!required.count(key) && !optional.count(key))
      throw std::invalid_argument("path '" + name + "': unknown parameter '" + key + "'");
}

void require_positive(const std::string& name, const std::map<std::string, double>& params,
                      const std::string& key) {
  if (!(params.at(key) > 0.0))
    throw std::invalid_argument("path '" + name + "': parameter '" + key + "' must be > 0");
}

}  // namespace

TargetKind target_from_name(const std::string& name) {
  if (name == "flow") return TargetKind::flow;
  if (name == "score") return TargetKind::score;
  if (name == "noise") return TargetKind::noise;
  throw std::invalid_argument("unknown regression target: '" + name + "'");
}

std::string target_name(TargetKind kind) {
  switch (kind) {
    case TargetKind::flow: return "flow";
    case TargetKind::score: return "score";
    case TargetKind::noise: return "noise";
  }
  throw std::logic_error("unreachable target kind");
}

PathKind PathSchedule::kind_from_name(const std::string& name) {
  if (name == "bridge") return PathKind::bridge;
  if (name == "ot") return PathKind::ot;
  if (name == "ve") return PathKind::ve;
  if (name == "vp") return PathKind::vp;
  if (name == "stochastic_interpolant" || name == "si") return PathKind::stochastic_interpolant;
  throw std::invalid_argument("unknown path kind: '" + name + "'");
}

std::string PathSchedule::kind_name(PathKind kind) {
  switch (kind) {
    case PathKind::bridge: return "bridge";
    case PathKind::ot: return "ot";
    case PathKind::ve: return "ve";
    case PathKind::vp: return "vp";
    case PathKind::stochastic_interpolant: return "stochastic_interpolant";
  }
  throw std::logic_error("unreachable path kind");
}

PathSchedule PathSchedule::make(PathKind kind, const std::map<std::string, double>& params,
                                bool allow_degenerate) {
  PathSchedule s;
  s.kind_ = kind;
  s.name_ = kind_name(kind);
  s.params_ = params;
  switch (kind) {
    case PathKind::bridge: {
      check_params(s.name_, params, {"sigma_min", "sigma"}, {});
      const double sigma_min = params.at("sigma_min");
      const double sigma = params.at("sigma");
      if (sigma_min < 0.0 || sigma < 0.0)
        throw std::invalid_argument("path 'bridge': sigma_min and sigma must be >= 0");
      if (sigma_min == 0.0 && sigma == 0.0 && !allow_degenerate)
        throw std::invalid_argument(
            "path 'bridge': sigma_min = sigma = 0 gives a deterministic (c = 0) path; "
            "pass allow_degenerate to opt into the test mode");
      break;
    }
    case PathKind::ot: {
      check_params(s.name_, params, {"eps_min"}, {});
      const double eps_min = params.at("eps_min");
      if (eps_min < 0.0 || eps_min >= 1.0)
        throw std::invalid_argument("path 'ot': eps_min must lie in [0, 1)");
      break;
    }
    case PathKind::ve: {
      check_params(s.name_, params, {"sigma_min", "sigma_max"}, {});
      require_positive(s.name_, params, "sigma_min");
      if (!(params.at("sigma_max") > params.at("sigma_min")))
        throw std::invalid_argument("path 've': sigma_max must exceed sigma_min");
      s.t_hi_ = 1.0 - kTimeClip;  // c(1) = 0
      break;
    }
    case PathKind::vp: {
      check_params(s.name_, params, {"beta_min", "beta_max"}, {});
      require_positive(s.name_, params, "beta_min");
      if (!(params.at("beta_max") >= params.at("beta_min")))
        throw std::invalid_argument("path 'vp': beta_max must be >= beta_min");
      s.t_hi_ = 1.0 - kTimeClip;  // c(1) = 0
      break;
    }
    case PathKind::stochastic_interpolant: {
      check_params(s.name_, params, {"eps"}, {"b_power"});
      require_positive(s.name_, params, "eps");
      const double b_power = params.count("b_power") ? params.at("b_power") : 2.0;
      if (b_power != 1.0 && b_power != 2.0)
        throw std::invalid_argument("path 'stochastic_interpolant': b_power must be 1 or 2");
      s.params_["b_power"] = b_power;
      s.t_lo_ = kTimeClip;        // c(0) = 0
      s.t_hi_ = 1.0 - kTimeClip;  // c(1) = 0
      break;
    }
  }
  return s;
}

PathSchedule PathSchedule::from_config(const Config& cfg, const std::string& table) {
  const std::string kind_key = table + ".kind";
  if (!cfg.has(kind_key))
    throw std::invalid_argument("config: missing key: " + kind_key);
  const PathKind kind = kind_from_name(cfg.str(kind_key));
  std::map<std::string, double> params;
  for (const std::string& key : cfg.keys_with_prefix(table)) {
    if (key == kind_key) continue;
    params[key.substr(table.size() + 1)] = cfg.number(key);
  }
  return make(kind, params);
}

double PathSchedule::param(const std::string& key) const {
  const auto it = params_.find(key);
  if (it == params_.end())
    throw std::invalid_argument("path '" + name_ + "': no parameter '" + key + "'");
  return it->second;
}

ScheduleValues PathSchedule::at(double t) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("schedule: t must lie in [0, 1], got " + std::to_string(t));
  ScheduleValues v;
  switch (kind_) {
    case PathKind::bridge: {
      const double sigma_min = params_.at("sigma_min");
      const double sigma = params_.at("sigma");
      v.a = 1.0 - t;
      v.b = t;
      v.da = -1.0;
      v.db = 1.0;
      const double var = sigma_min * sigma_min + sigma * sigma * t * (1.0 - t);
      v.c = std::sqrt(var);
      v.dc = v.c > 0.0 ? 0.5 * sigma * sigma * (1.0 - 2.0 * t) / v.c : 0.0;
      break;
    }
    case PathKind::ot: {
      const double eps_min = params_.at("eps_min");
      v.a = 0.0;
      v.b = t;
      v.da = 0.0;
      v.db = 1.0;
      v.c = 1.0 - (1.0 - eps_min) * t;
      v.dc = -(1.0 - eps_min);
      break;
    }
    case PathKind::ve: {
      const double sigma_min = params_.at("sigma_min");
      const double sigma_max = params_.at("sigma_max");
      v.a = 1.0;
      v.b = 0.0;
      v.da = 0.0;
      v.db = 0.0;
      const double log_ratio = std::log(sigma_max / sigma_min);
      const double g = std::exp(2.0 * (1.0 - t) * log_ratio) - 1.0;  // c = sigma_min sqrt(g)
      v.c = sigma_min * std::sqrt(std::max(g, 0.0));
      v.dc = g > 0.0 ? -sigma_min * log_ratio * (g + 1.0) / std::sqrt(g) : 0.0;
      break;
    }
    case PathKind::vp: {
      const double beta_min = params_.at("beta_min");
      const double beta_max = params_.at("beta_max");
      const double s = 1.0 - t;
      const double big_t = s * beta_min + 0.5 * s * s * (beta_max - beta_min);
      const double beta_s = beta_min + s * (beta_max - beta_min);  // dT(s)/ds
      const double decay = std::exp(-big_t);
      v.a = std::exp(-0.5 * big_t);
      v.b = 0.0;
      v.da = 0.5 * beta_s * v.a;
      v.db = 0.0;
      v.c = std::sqrt(std::max(1.0 - decay, 0.0));
      v.dc = v.c > 0.0 ? -0.5 * beta_s * decay / v.c : 0.0;
      break;
    }
    case PathKind::stochastic_interpolant: {
      const double eps = params_.at("eps");
      const double b_power = params_.at("b_power");
      const double rt = std::sqrt(std::max(t, 0.0));
      v.a = 1.0 - t;
      v.b = b_power == 2.0 ? t * t : t;
      v.da = -1.0;
      v.db = b_power == 2.0 ? 2.0 * t : 1.0;
      v.c = eps * (1.0 - t) * rt;
      v.dc = rt > 0.0 ? eps * (1.0 - 3.0 * t) / (2.0 * rt) : 0.0;
      break;
    }
  }
  return v;
}

ConditionPair::ConditionPair(Eigen::VectorXd z0_in, Eigen::VectorXd z1_in)
    : z0(std::move(z0_in)), z1(std::move(z1_in)) {
  if (z0.size() != z1.size())
    throw std::invalid_argument("ConditionPair: z0 and z1 must share a dimension");
  if (z0.size() == 0) throw std::invalid_argument("ConditionPair: empty vectors");
  if (!z0.allFinite() || !z1.allFinite())
    throw std::invalid_argument("ConditionPair: entries must be finite");
}

PathMoments path_moments(const PathSchedule& s, const ConditionPair& pair, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("path_moments: t must lie in [0, 1]");
  const ScheduleValues v = s.at(t);
  PathMoments m;
  m.mean = v.a * pair.z0 + v.b * pair.z1;
  m.stddev = v.c;
  return m;
}

PathPoint sample_point(const PathSchedule& s, const ConditionPair& pair, double t, Rng& rng) {
  const PathMoments m = path_moments(s, pair, t);
  PathPoint pt;
  pt.t = t;
  pt.xi = rng.normal_vector(pair.z0.size());
  pt.z = m.mean + m.stddev * pt.xi;
  return pt;
}

Eigen::VectorXd conditional_vf(const PathSchedule& s, const ConditionPair& pair, double t,
                               const Eigen::VectorXd& z) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("conditional_vf: t must lie in [0, 1]");
  const ScheduleValues v = s.at(t);
  if (!(v.c > 0.0))
    throw SingularScheduleError("conditional_vf: schedule '" + s.name() + "' has c(t) = 0 at t = " +
                                std::to_string(t) + "; use sigma_min > 0 or stay inside (t_lo, t_hi)");
  const Eigen::VectorXd mean = v.a * pair.z0 + v.b * pair.z1;
  return (v.dc / v.c) * (z - mean) + v.da * pair.z0 + v.db * pair.z1;
}

Eigen::VectorXd regression_target(const PathSchedule& s, const ConditionPair& pair,
                                  const PathPoint& pt, TargetKind kind) {
  if (kind == TargetKind::flow) return conditional_vf(s, pair, pt.t, pt.z);
  const ScheduleValues v = s.at(pt.t);
  if (!(v.c > 0.0))
    throw SingularScheduleError("regression_target: schedule '" + s.name() +
                                "' has c(t) = 0 at t = " + std::to_string(pt.t));
  const Eigen::VectorXd mean = v.a * pair.z0 + v.b * pair.z1;
  if (kind == TargetKind::score) return (mean - pt.z) / (v.c * v.c);
  return (pt.z - mean) / v.c;
}

}  // namespace bridgeflow
