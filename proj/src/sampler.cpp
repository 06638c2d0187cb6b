// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/sampler.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bridgeflow/parallel.hpp"
#include "bridgeflow/tensorfile.hpp"

namespace bridgeflow {
namespace {

Eigen::MatrixXd as_field(const Eigen::VectorXd& row, int field_h, int field_w) {
  if (field_h <= 0 || field_w <= 0) return row.transpose();  // 1 x d vector state
  if (static_cast<Eigen::Index>(field_h) * field_w != row.size())
    throw std::invalid_argument("rollout: field_h * field_w must equal the state dimension");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(row.data(), field_h, field_w);
}

}  // namespace

Scheme scheme_from_name(const std::string& name) {
  if (name == "euler") return Scheme::euler;
  if (name == "rk4") return Scheme::rk4;
  throw std::invalid_argument("unknown scheme: '" + name + "'");
}

std::string scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::euler: return "euler";
    case Scheme::rk4: return "rk4";
  }
  throw std::logic_error("unreachable scheme");
}

SamplerConfig SamplerConfig::from_config(const Config& cfg, const std::string& table) {
  SamplerConfig sc;
  sc.scheme = scheme_from_name(cfg.str_or(table + ".scheme", scheme_name(sc.scheme)));
  sc.steps = static_cast<int>(cfg.integer_or(table + ".steps", sc.steps));
  sc.sigma_sam = cfg.number_or(table + ".sigma_sam", sc.sigma_sam);
  sc.ensemble = static_cast<int>(cfg.integer_or(table + ".ensemble", sc.ensemble));
  sc.seed = static_cast<std::uint64_t>(cfg.integer_or(table + ".seed", 0));
  const std::string grid_text = cfg.str_or(table + ".grid", "");
  if (!grid_text.empty()) {
    std::istringstream in(grid_text);
    std::string knot;
    while (std::getline(in, knot, ','))
      sc.grid.push_back(std::stod(knot));
  }
  sc.validate();
  return sc;
}

void SamplerConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
  if (!(sigma_sam >= 0.0)) throw std::invalid_argument("sampler: sigma_sam must be >= 0");
  if (ensemble < 1) throw std::invalid_argument("sampler: ensemble must be >= 1");
  if (!grid.empty()) {
    if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0)
      throw std::invalid_argument("sampler: grid must run from 0 to 1");
    for (std::size_t i = 1; i < grid.size(); ++i)
      if (!(grid[i] > grid[i - 1]))
        throw std::invalid_argument("sampler: grid must be strictly increasing");
  }
}

std::vector<double> SamplerConfig::effective_grid() const {
  if (!grid.empty()) return grid;
  std::vector<double> uniform(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i)
    uniform[static_cast<std::size_t>(i)] = static_cast<double>(i) / steps;
  return uniform;
}

VfFn make_vf(const VectorFieldModel& model) {
  return [model](const Eigen::VectorXd& y, const Eigen::VectorXd& y0,
                 const Eigen::VectorXd& y_cond, double gap, double s) {
    return model.forward(y, y0, y_cond, gap, s);
  };
}

Eigen::VectorXd forecast_next(const VfFn& vf, const LinearCodec& codec,
                              const Eigen::MatrixXd& prefix, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  const int prev = static_cast<int>(prefix.rows());  // T-1
  if (prev < 2) throw std::invalid_argument("forecast_next: prefix too short (need >= 2 states)");
  if (prefix.cols() != codec.data_dim())
    throw std::invalid_argument("forecast_next: prefix dimension does not match codec");
  const int big_t = prev + 1;

  const std::vector<double> grid = cfg.effective_grid();
  const Eigen::VectorXd xi = rng.normal_vector(codec.latent_dim());
  const Eigen::VectorXd y0 =
      codec.encode(prefix.row(prev - 1).transpose()) + cfg.sigma_sam * xi;

  Eigen::VectorXd y = y0;
  for (std::size_t n = 0; n + 1 < grid.size(); ++n) {
    const int c = static_cast<int>(rng.uniform_int(2, big_t - 1));
    const int cond_index = big_t - c;  // 1-based row, also the gap argument
    const Eigen::VectorXd y_cond = codec.encode(prefix.row(cond_index - 1).transpose());
    const double gap = static_cast<double>(cond_index);
    const double s = grid[n];
    const double ds = grid[n + 1] - grid[n];
    switch (cfg.scheme) {
      case Scheme::euler: {
        y += ds * vf(y, y0, y_cond, gap, s);
        break;
      }
      case Scheme::rk4: {
        const Eigen::VectorXd k1 = vf(y, y0, y_cond, gap, s);
        const Eigen::VectorXd k2 = vf(y + 0.5 * ds * k1, y0, y_cond, gap, s + 0.5 * ds);
        const Eigen::VectorXd k3 = vf(y + 0.5 * ds * k2, y0, y_cond, gap, s + 0.5 * ds);
        const Eigen::VectorXd k4 = vf(y + ds * k3, y0, y_cond, gap, s + ds);
        y += (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        break;
      }
    }
  }
  return codec.decode(y);
}

void ForecastReport::write_csv(const std::filesystem::path& file) const {
  if (!has_metrics) throw std::logic_error("forecast report: no metrics to export");
  std::ofstream out(file);
  if (!out) throw std::runtime_error("forecast report: cannot write " + file.string());
  out << "step,mse,rfne,psnr,ssim,pearson\n";
  char buf[200];
  for (std::size_t i = 0; i < per_step.size(); ++i) {
    const MetricSet& m = per_step[i];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i + 1, m.mse, m.rfne,
                  m.psnr, m.ssim, m.pearson);
    out << buf;
  }
}

void ForecastReport::write_tensors(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t e = 0; e < members.size(); ++e) {
    std::snprintf(name, sizeof name, "member_%03zu", e);
    write_matrix(dir / name, name, members[e]);
  }
  write_matrix(dir / "ensemble_mean", "ensemble_mean", ensemble_mean);
}

ForecastReport rollout(const VfFn& vf, const LinearCodec& codec, const Eigen::MatrixXd& prefix,
                       int horizon, const SamplerConfig& cfg, const Eigen::MatrixXd* truth,
                       double data_range, int field_h, int field_w) {
  cfg.validate();
  if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
  const Eigen::Index dim = prefix.cols();
  if (truth != nullptr && (truth->rows() != horizon || truth->cols() != dim))
    throw std::invalid_argument("rollout: truth shape must be horizon x dim");

  ForecastReport report;
  report.members.assign(static_cast<std::size_t>(cfg.ensemble),
                        Eigen::MatrixXd::Zero(horizon, dim));
  parallel_for(static_cast<std::size_t>(cfg.ensemble), [&](std::size_t e) {
    Rng rng(derive_seed(cfg.seed, e));
    Eigen::MatrixXd context(prefix.rows() + horizon, dim);
    context.topRows(prefix.rows()) = prefix;
    Eigen::Index filled = prefix.rows();
    for (int step = 0; step < horizon; ++step) {
      const Eigen::MatrixXd current = context.topRows(filled);
      const Eigen::VectorXd next = forecast_next(vf, codec, current, cfg, rng);
      report.members[e].row(step) = next.transpose();
      context.row(filled++) = next.transpose();
    }
  });

  report.ensemble_mean = Eigen::MatrixXd::Zero(horizon, dim);
  for (const Eigen::MatrixXd& member : report.members) report.ensemble_mean += member;
  report.ensemble_mean /= static_cast<double>(cfg.ensemble);

  if (truth != nullptr) {
    report.has_metrics = true;
    report.per_step.assign(static_cast<std::size_t>(horizon), MetricSet{});
    for (int step = 0; step < horizon; ++step) {
      const Eigen::MatrixXd truth_field =
          as_field(truth->row(step).transpose(), field_h, field_w);
      MetricSet& avg = report.per_step[static_cast<std::size_t>(step)];
      for (const Eigen::MatrixXd& member : report.members) {
        const MetricSet m = compute_metrics(
            as_field(member.row(step).transpose(), field_h, field_w), truth_field, data_range);
        avg.mse += m.mse;
        avg.rfne += m.rfne;
        avg.psnr += m.psnr;
        avg.ssim += m.ssim;
        avg.pearson += m.pearson;
      }
      const double inv = 1.0 / cfg.ensemble;
      avg.mse *= inv;
      avg.rfne *= inv;
      avg.psnr *= inv;
      avg.ssim *= inv;
      avg.pearson *= inv;
    }
    MetricSet& agg = report.aggregate;
    for (const MetricSet& m : report.per_step) {
      agg.mse += m.mse;
      agg.rfne += m.rfne;
      agg.psnr += m.psnr;
      agg.ssim += m.ssim;
      agg.pearson += m.pearson;
    }
    const double inv = 1.0 / horizon;
    agg.mse *= inv;
    agg.rfne *= inv;
    agg.psnr *= inv;
    agg.ssim *= inv;
    agg.pearson *= inv;
  }
  return report;
}

}  // namespace bridgeflow
