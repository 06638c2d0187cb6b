// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bridgeflow/parallel.hpp"
#include "bridgeflow/rng.hpp"

namespace bridgeflow {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

struct SnapPoint {
  double t = 0.0;       // snapped to the step grid
  std::size_t step = 0; // state recorded after this many steps
  bool is_limit = false;
};

std::vector<SnapPoint> snap_points(const std::vector<double>& checkpoints,
                                   const std::vector<double>& limit_ts, double dt) {
  std::vector<SnapPoint> snaps;
  auto add = [&](double t, bool is_limit) {
    if (!(t > 0.0 && t < 1.0))
      throw std::invalid_argument("sde check: checkpoints must lie in (0, 1)");
    SnapPoint sp;
    sp.step = static_cast<std::size_t>(std::llround(t / dt));
    if (sp.step == 0) sp.step = 1;
    sp.t = static_cast<double>(sp.step) * dt;
    sp.is_limit = is_limit;
    snaps.push_back(sp);
  };
  for (double t : checkpoints) add(t, false);
  for (double t : limit_ts) add(t, true);
  if (snaps.empty()) throw std::invalid_argument("sde check: no checkpoints given");
  std::sort(snaps.begin(), snaps.end(),
            [](const SnapPoint& a, const SnapPoint& b) { return a.step < b.step; });
  return snaps;
}

/// Column-wise mean/variance statistics of a paths x d sample matrix.
void fill_moments(const Eigen::MatrixXd& z_samples, const Eigen::MatrixXd& m_samples,
                  MomentCheckpoint& cp) {
  const Eigen::Index n = z_samples.rows();
  const Eigen::Index d = z_samples.cols();
  cp.mean = z_samples.colwise().mean();
  cp.mean_se = Eigen::VectorXd::Zero(d);
  double var_sum = 0.0, mt_sum = 0.0;
  const Eigen::VectorXd m_mean = m_samples.colwise().mean();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double vz =
        (z_samples.col(j).array() - cp.mean(j)).square().sum() / static_cast<double>(n - 1);
    const double vm =
        (m_samples.col(j).array() - m_mean(j)).square().sum() / static_cast<double>(n - 1);
    cp.mean_se(j) = std::sqrt(vz / static_cast<double>(n));
    var_sum += vz;
    mt_sum += vm;
  }
  cp.var = var_sum / static_cast<double>(d);
  cp.mt_var = mt_sum / static_cast<double>(d);
  const double rel_se = std::sqrt(2.0 / static_cast<double>(n - 1));
  cp.var_se = cp.var * rel_se;
  cp.mt_var_se = cp.mt_var * rel_se;
}

void check_sde_inputs(const Eigen::VectorXd& z0, const Eigen::VectorXd& z1, std::size_t paths,
                      double dt, double t_max) {
  if (z0.size() != z1.size() || z0.size() == 0)
    throw std::invalid_argument("sde check: z0/z1 must be nonempty with equal dimension");
  if (paths < 2) throw std::invalid_argument("sde check: need at least 2 paths");
  if (!(dt > 0.0 && dt <= 1e-3)) throw std::invalid_argument("sde check: require 0 < dt <= 1e-3");
  // Tiny slack so a checkpoint snapped onto the step grid cannot tip an
  // exact-ratio configuration (e.g. t=0.99 with dt=1e-4) over the bound.
  if (!(dt <= (1.0 - t_max) / 100.0 * (1.0 + 1e-9)))
    throw std::invalid_argument("sde check: dt too large for the last checkpoint "
                                "(require dt <= (1 - max t)/100)");
}

SdeMomentReport finalize_report(std::vector<MomentCheckpoint> all, std::vector<char> is_limit,
                                double sigma_min, std::size_t paths, double dt) {
  SdeMomentReport report;
  report.paths = paths;
  report.dt = dt;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (is_limit[i])
      report.limit_points.push_back(all[i]);
    else
      report.checkpoints.push_back(all[i]);
  }
  if (report.limit_points.size() >= 2) {
    const MomentCheckpoint& lo = report.limit_points[report.limit_points.size() - 2];
    const MomentCheckpoint& hi = report.limit_points.back();
    report.limit_estimate =
        hi.mt_var + (hi.mt_var - lo.mt_var) * (1.0 - hi.t) / (hi.t - lo.t);
    report.limit_expected = sigma_min * sigma_min;
    report.has_limit = true;
  }
  return report;
}

}  // namespace

SdeMomentReport sde_moment_check(double sigma_min, double sigma, const Eigen::VectorXd& z0,
                                 const Eigen::VectorXd& z1, const std::vector<double>& checkpoints,
                                 std::size_t paths, double dt, std::uint64_t seed,
                                 const std::vector<double>& limit_ts) {
  if (!(sigma_min >= 0.0) || !(sigma >= 0.0))
    throw std::invalid_argument("sde check: sigma_min and sigma must be >= 0");
  const std::vector<SnapPoint> snaps = snap_points(checkpoints, limit_ts, dt);
  check_sde_inputs(z0, z1, paths, dt, snaps.back().t);
  const Eigen::Index d = z0.size();
  const std::size_t total_steps = snaps.back().step;

  std::vector<Eigen::MatrixXd> z_store(snaps.size()), m_store(snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    z_store[i].resize(static_cast<Eigen::Index>(paths), d);
    m_store[i].resize(static_cast<Eigen::Index>(paths), d);
  }

  const double sqrt_dt = std::sqrt(dt);
  parallel_for(paths, [&](std::size_t p) {
    Rng rng(derive_seed(seed, p));
    Eigen::VectorXd z = z0;
    Eigen::VectorXd integral = Eigen::VectorXd::Zero(d);  // int G_s/(1-s) dW_s
    std::size_t next_snap = 0;
    for (std::size_t n = 0; n < total_steps; ++n) {
      const double s = static_cast<double>(n) * dt;
      const double one_minus = 1.0 - s;
      const double g = std::sqrt(sigma * sigma + 2.0 * sigma_min * sigma_min / one_minus);
      const Eigen::VectorXd dw = sqrt_dt * rng.normal_vector(static_cast<int>(d));
      z += (dt / one_minus) * (z1 - z) + g * dw;
      integral += (g / one_minus) * dw;
      while (next_snap < snaps.size() && snaps[next_snap].step == n + 1) {
        const double t_snap = snaps[next_snap].t;
        z_store[next_snap].row(static_cast<Eigen::Index>(p)) = z.transpose();
        m_store[next_snap].row(static_cast<Eigen::Index>(p)) =
            ((1.0 - t_snap) * integral).transpose();
        ++next_snap;
      }
    }
  });

  std::vector<MomentCheckpoint> all(snaps.size());
  std::vector<char> limit_flags(snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    MomentCheckpoint& cp = all[i];
    const double t = snaps[i].t;
    cp.t = t;
    fill_moments(z_store[i], m_store[i], cp);
    cp.mean_expected = (1.0 - t) * z0 + t * z1;
    cp.var_expected = sigma_min * sigma_min + sigma * sigma * t * (1.0 - t);
    cp.mt_var_expected =
        (1.0 - t) * t * sigma * sigma + sigma_min * sigma_min * t * (2.0 - t);
    limit_flags[i] = snaps[i].is_limit;
  }
  return finalize_report(std::move(all), std::move(limit_flags), sigma_min, paths, dt);
}

SdeMomentReport alt_sde_check(double sigma_min, double sigma, const Eigen::VectorXd& z0,
                              const Eigen::VectorXd& z1, const std::vector<double>& checkpoints,
                              std::size_t paths, double dt, std::uint64_t seed,
                              const std::vector<double>& limit_ts) {
  if (!(sigma_min > 0.0))
    throw std::invalid_argument("alt sde check: sigma_min must be > 0 (c'(0) is singular at 0)");
  if (!(sigma >= 0.0)) throw std::invalid_argument("alt sde check: sigma must be >= 0");
  const std::vector<SnapPoint> snaps = snap_points(checkpoints, limit_ts, dt);
  check_sde_inputs(z0, z1, paths, dt, snaps.back().t);
  const Eigen::Index d = z0.size();
  const std::size_t total_steps = snaps.back().step;

  std::vector<Eigen::MatrixXd> z_store(snaps.size()), m_store(snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    z_store[i].resize(static_cast<Eigen::Index>(paths), d);
    m_store[i].resize(static_cast<Eigen::Index>(paths), d);
  }

  auto dc = [sigma_min, sigma](double t) {
    const double c = std::sqrt(sigma_min * sigma_min + sigma * sigma * t * (1.0 - t));
    return sigma * sigma * (1.0 - 2.0 * t) / (2.0 * c);
  };

  parallel_for(paths, [&](std::size_t p) {
    Rng rng(derive_seed(seed, p));
    const Eigen::VectorXd xi = rng.normal_vector(static_cast<int>(d));
    Eigen::VectorXd z = z0 + sigma_min * xi;
    std::size_t next_snap = 0;
    for (std::size_t n = 0; n < total_steps; ++n) {
      const double s = static_cast<double>(n) * dt;
      z += dt * ((z1 - z0) + dc(s) * xi);
      while (next_snap < snaps.size() && snaps[next_snap].step == n + 1) {
        const double t_snap = snaps[next_snap].t;
        const Eigen::VectorXd drift_path = z0 + t_snap * (z1 - z0);
        z_store[next_snap].row(static_cast<Eigen::Index>(p)) = z.transpose();
        m_store[next_snap].row(static_cast<Eigen::Index>(p)) = (z - drift_path).transpose();
        ++next_snap;
      }
    }
  });

  std::vector<MomentCheckpoint> all(snaps.size());
  std::vector<char> limit_flags(snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) {
    MomentCheckpoint& cp = all[i];
    const double t = snaps[i].t;
    cp.t = t;
    fill_moments(z_store[i], m_store[i], cp);
    cp.mean_expected = (1.0 - t) * z0 + t * z1;
    cp.var_expected = sigma_min * sigma_min + sigma * sigma * t * (1.0 - t);
    cp.mt_var_expected = cp.var_expected;  // deviation variance is c_t^2
    limit_flags[i] = snaps[i].is_limit;
  }
  return finalize_report(std::move(all), std::move(limit_flags), sigma_min, paths, dt);
}

VarianceReport vf_variance_compare(double rho, double marginal_var, double sigma_min,
                                   double sigma, const std::vector<double>& ts, int dim,
                                   std::size_t samples, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("variance compare: require |rho| < 1");
  if (!(marginal_var > 0.0))
    throw std::invalid_argument("variance compare: marginal variance must be > 0");
  if (!(sigma_min > 0.0))
    throw std::invalid_argument("variance compare: the condition is undefined for sigma_min = 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("variance compare: sigma must be >= 0");
  if (dim < 1) throw std::invalid_argument("variance compare: dim must be >= 1");
  if (samples < 2) throw std::invalid_argument("variance compare: need at least 2 samples");
  if (ts.empty()) throw std::invalid_argument("variance compare: no t values given");

  VarianceReport report;
  report.samples = samples;
  report.dim = dim;
  report.rho = rho;
  report.marginal_var = marginal_var;
  report.sigma_min = sigma_min;
  report.sigma = sigma;
  report.cond_lhs = rho * marginal_var;
  report.cond_rhs =
      0.5 * ((std::pow(sigma, 4) / (4.0 * sigma_min * sigma_min) - 1.0) + marginal_var);
  report.condition_holds = report.cond_lhs >= report.cond_rhs;

  const double sd = std::sqrt(marginal_var);
  const double innov = std::sqrt(marginal_var * (1.0 - rho * rho));
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    if (!(t >= 0.0 && t <= 1.0))
      throw std::invalid_argument("variance compare: t values must lie in [0, 1]");
    const double c = std::sqrt(sigma_min * sigma_min + sigma * sigma * t * (1.0 - t));
    const double dc = sigma * sigma * (1.0 - 2.0 * t) / (2.0 * c);

    Eigen::MatrixXd u(static_cast<Eigen::Index>(samples), dim);
    Eigen::MatrixXd u_ot(static_cast<Eigen::Index>(samples), dim);
    parallel_for(samples, [&](std::size_t i) {
      Rng rng(derive_seed(seed, ti * samples + i));
      const Eigen::VectorXd z_prev = sd * rng.normal_vector(dim);
      const Eigen::VectorXd z_next = rho * z_prev + innov * rng.normal_vector(dim);
      const Eigen::VectorXd xi = rng.normal_vector(dim);
      const Eigen::VectorXd eta = rng.normal_vector(dim);
      u.row(static_cast<Eigen::Index>(i)) = (z_next - z_prev + dc * xi).transpose();
      u_ot.row(static_cast<Eigen::Index>(i)) = (z_prev - eta).transpose();
    });

    VariancePoint pt;
    pt.t = t;
    const double rel_se = std::sqrt(2.0 / static_cast<double>(samples - 1));
    double se_u_sq = 0.0, se_ot_sq = 0.0;
    for (int j = 0; j < dim; ++j) {
      const double mu = u.col(j).mean();
      const double mo = u_ot.col(j).mean();
      const double vu =
          (u.col(j).array() - mu).square().sum() / static_cast<double>(samples - 1);
      const double vo =
          (u_ot.col(j).array() - mo).square().sum() / static_cast<double>(samples - 1);
      pt.var_u += vu;
      pt.var_ot += vo;
      se_u_sq += vu * vu * rel_se * rel_se;
      se_ot_sq += vo * vo * rel_se * rel_se;
    }
    pt.var_u_se = std::sqrt(se_u_sq);
    pt.var_ot_se = std::sqrt(se_ot_sq);
    pt.var_u_closed = dim * (2.0 * marginal_var * (1.0 - rho) + dc * dc);
    pt.var_ot_closed = dim * (marginal_var + 1.0);
    const double diff = pt.var_ot - pt.var_u;
    const double se_diff = std::sqrt(pt.var_u_se * pt.var_u_se + pt.var_ot_se * pt.var_ot_se);
    if (diff > 5.0 * se_diff)
      pt.verdict = "bridge_lower";
    else if (diff < -5.0 * se_diff)
      pt.verdict = "ot_lower";
    else
      pt.verdict = "inconclusive";
    report.points.push_back(std::move(pt));
  }
  return report;
}

ContinuityGrid default_continuity_grid(PathKind kind) {
  switch (kind) {
    case PathKind::bridge: return {801, 201, 0.0, 1.0};
    case PathKind::ot: return {1601, 401, 0.0, 1.0};
    case PathKind::ve: return {1201, 301, 0.0, 0.8};
    case PathKind::vp: return {1201, 601, 0.0, 0.9};
    case PathKind::stochastic_interpolant: return {601, 601, 0.1, 0.8};
  }
  throw std::logic_error("unreachable path kind");
}

double continuity_residual(const PathSchedule& schedule, double z0, double z1,
                           const ContinuityGrid& grid) {
  if (grid.nz < 5 || grid.nt < 5)
    throw std::invalid_argument("continuity: need at least 5 grid points per axis");
  if (!(grid.t_lo >= 0.0 && grid.t_lo < grid.t_hi && grid.t_hi <= 1.0))
    throw std::invalid_argument("continuity: require 0 <= t_lo < t_hi <= 1");

  const int nz = grid.nz, nt = grid.nt;
  Eigen::VectorXd ts(nt), mu(nt), cs(nt), das(nt), dbs(nt), dcs(nt);
  for (int j = 0; j < nt; ++j) {
    const double t = grid.t_lo + (grid.t_hi - grid.t_lo) * j / (nt - 1);
    const ScheduleValues v = schedule.at(t);
    if (!(v.c > 0.0) || !std::isfinite(v.dc))
      throw std::invalid_argument("continuity: schedule is singular on the t window");
    ts(j) = t;
    mu(j) = v.a * z0 + v.b * z1;
    cs(j) = v.c;
    das(j) = v.da;
    dbs(j) = v.db;
    dcs(j) = v.dc;
  }
  const double pad = 4.5;
  const double z_lo = (mu - pad * cs).minCoeff();
  const double z_hi = (mu + pad * cs).maxCoeff();
  const double dz = (z_hi - z_lo) / (nz - 1);
  const double dt = (ts(nt - 1) - ts(0)) / (nt - 1);
  if (!(dz <= cs.minCoeff() / 10.0))
    throw std::invalid_argument("continuity: grid too coarse (need dz <= min c / 10)");

  Eigen::MatrixXd p(nz, nt), f(nz, nt);
  for (int j = 0; j < nt; ++j) {
    const double inv_c = 1.0 / cs(j);
    const double drift = das(j) * z0 + dbs(j) * z1;
    for (int i = 0; i < nz; ++i) {
      const double z = z_lo + i * dz;
      const double w = (z - mu(j)) * inv_c;
      const double density = kInvSqrt2Pi * inv_c * std::exp(-0.5 * w * w);
      p(i, j) = density;
      f(i, j) = density * (dcs(j) * inv_c * (z - mu(j)) + drift);
    }
  }

  double max_resid = 0.0, max_dpdt = 0.0;
  for (int j = 1; j + 1 < nt; ++j) {
    for (int i = 0; i < nz; ++i) {
      const double dpdt = (p(i, j + 1) - p(i, j - 1)) / (2.0 * dt);
      max_dpdt = std::max(max_dpdt, std::abs(dpdt));
      if (i == 0 || i + 1 == nz) continue;
      const double dfdz = (f(i + 1, j) - f(i - 1, j)) / (2.0 * dz);
      max_resid = std::max(max_resid, std::abs(dpdt + dfdz));
    }
  }
  if (!(max_dpdt > 0.0)) throw std::runtime_error("continuity: degenerate density grid");
  return max_resid / max_dpdt;
}

double flow_map_error(const PathSchedule& schedule, const ConditionPair& pair,
                      const Eigen::VectorXd& xi, double t0, double t1, int steps) {
  if (!(t0 >= 0.0 && t0 < t1 && t1 <= 1.0))
    throw std::invalid_argument("flow map: require 0 <= t0 < t1 <= 1");
  if (steps < 1) throw std::invalid_argument("flow map: steps must be >= 1");
  if (xi.size() != pair.z0.size())
    throw std::invalid_argument("flow map: xi dimension mismatch");

  auto psi = [&](double t) -> Eigen::VectorXd {
    const ScheduleValues v = schedule.at(t);
    return v.a * pair.z0 + v.b * pair.z1 + v.c * xi;
  };
  Eigen::VectorXd z = psi(t0);
  const double h = (t1 - t0) / steps;
  for (int n = 0; n < steps; ++n) {
    const double t = t0 + n * h;
    const Eigen::VectorXd k1 = conditional_vf(schedule, pair, t, z);
    const Eigen::VectorXd k2 = conditional_vf(schedule, pair, t + 0.5 * h, z + 0.5 * h * k1);
    const Eigen::VectorXd k3 = conditional_vf(schedule, pair, t + 0.5 * h, z + 0.5 * h * k2);
    const Eigen::VectorXd k4 = conditional_vf(schedule, pair, t + h, z + h * k3);
    z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return (z - psi(t1)).norm();
}

}  // namespace bridgeflow
