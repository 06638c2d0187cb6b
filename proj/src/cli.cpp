// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bridgeflow/analysis.hpp"
#include "bridgeflow/codec.hpp"
#include "bridgeflow/config.hpp"
#include "bridgeflow/dynamics.hpp"
#include "bridgeflow/metrics.hpp"
#include "bridgeflow/model.hpp"
#include "bridgeflow/parallel.hpp"
#include "bridgeflow/path.hpp"
#include "bridgeflow/rng.hpp"
#include "bridgeflow/sampler.hpp"
#include "bridgeflow/tensorfile.hpp"
#include "bridgeflow/trainer.hpp"
#include "bridgeflow/version.hpp"

namespace bridgeflow {
namespace {

namespace fs = std::filesystem;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto lo = item.find_first_not_of(" \t");
    const auto hi = item.find_last_not_of(" \t");
    if (lo == std::string::npos)
      throw std::invalid_argument("config: empty entry in list '" + text + "'");
    items.push_back(item.substr(lo, hi - lo + 1));
  }
  if (items.empty()) throw std::invalid_argument("config: empty list");
  return items;
}

std::vector<double> split_numbers(const std::string& text) {
  std::vector<double> values;
  for (const std::string& item : split_list(text)) {
    std::size_t used = 0;
    values.push_back(std::stod(item, &used));
    if (used != item.size())
      throw std::invalid_argument("config: bad number '" + item + "' in list");
  }
  return values;
}

/// Comma-list config value; a bare number is accepted as a one-element list.
std::string list_text(const Config& cfg, const std::string& key, const std::string& fallback) {
  const auto it = cfg.entries().find(key);
  if (it == cfg.entries().end()) return fallback;
  if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  if (const auto* d = std::get_if<double>(&it->second)) return fmt_double(*d);
  throw std::invalid_argument("config: key '" + key + "' must be a string or number");
}

fs::path resolve_out_root(const Config& cfg, const std::string& out_flag) {
  if (!out_flag.empty()) return out_flag;
  if (cfg.has("out_dir")) return cfg.str("out_dir");
  if (const char* env = std::getenv("BRIDGEFLOW_OUT"); env != nullptr && *env != '\0')
    return env;
  return "out";
}

void write_manifest(const fs::path& dir, const std::string& command, const Config& cfg,
                    std::uint64_t seed) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["config"] = cfg.canonical();
  manifest["config_hash"] = cfg.hash();
  manifest["seed"] = seed;
  manifest["version"] = kVersion;
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out)
    throw std::runtime_error("cannot write manifest to " + (dir / "manifest.json").string());
}

/// Known config surface; modules re-validate their own tables strictly.
void check_known_keys(const Config& cfg) {
  static const std::set<std::string> exact = {
      "seed", "out_dir",
      // codec
      "codec.p", "codec.data_dir",
      // model
      "model.width", "model.depth", "model.embed_dim", "model.activation",
      "model.t_period_min", "model.t_period_max", "model.gap_period_min",
      "model.gap_period_max", "model.init_output_scale",
      // train
      "train.iterations", "train.batch", "train.lr", "train.warmup_frac", "train.seed",
      "train.target", "train.weighting", "train.checkpoint_every", "train.k", "train.l",
      "train.data_dir", "train.codec_dir",
      // sampler
      "sampler.scheme", "sampler.steps", "sampler.sigma_sam", "sampler.ensemble",
      "sampler.seed", "sampler.grid",
      // metrics
      "metrics.data_range", "metrics.field_h", "metrics.field_w", "metrics.pred",
      "metrics.truth",
      // forecast
      "forecast.traj", "forecast.model_dir",
      // sweep
      "sweep.sigmas", "sweep.schemes", "sweep.steps",
      // verify
      "verify.paths", "verify.samples", "verify.seed"};
  static const std::set<std::string> prefixes = {"system", "path"};
  cfg.require_known(exact, prefixes);
}

struct Pipeline {
  std::vector<Trajectory> trajs;
  LinearCodec codec;
  Dataset dataset;
};

Pipeline load_pipeline(const Config& cfg, const fs::path& root) {
  const fs::path data_dir = cfg.str_or("train.data_dir", (root / "data").string());
  const fs::path codec_dir = cfg.str_or("train.codec_dir", (root / "codec").string());
  std::vector<Trajectory> trajs = load_corpus(data_dir);
  LinearCodec codec = LinearCodec::load(codec_dir);
  const int k = static_cast<int>(cfg.integer_or("train.k", 5));
  const int l = static_cast<int>(cfg.integer_or("train.l", 10));
  Dataset dataset = build_dataset(trajs, k, l);
  if (codec.data_dim() != dataset.dim())
    throw std::invalid_argument("codec dimension " + std::to_string(codec.data_dim()) +
                                " does not match corpus dimension " +
                                std::to_string(dataset.dim()));
  return Pipeline{std::move(trajs), std::move(codec), std::move(dataset)};
}

int cmd_gen_data(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  const SystemSpec sys = SystemSpec::from_config(cfg);
  const int count = static_cast<int>(cfg.integer_or("system.count", sys.default_count()));
  const int m = static_cast<int>(cfg.integer_or("system.m", sys.default_m()));
  const double dt = cfg.number_or("system.dt", sys.default_dt());
  if (count < 1) throw std::invalid_argument("config: system.count must be >= 1");
  sys.validate(dt);

  const std::vector<Trajectory> corpus = make_corpus(sys, count, m, dt, seed);
  const fs::path dir = root / "data";
  save_corpus(corpus, dir);
  write_manifest(dir, "gen-data", cfg, seed);
  std::cout << "gen-data: wrote " << count << " x " << sys.name() << " trajectories (m=" << m
            << ", d=" << sys.dim() << ", dt=" << fmt_double(dt) << ") to " << dir.string()
            << "\n";
  return 0;
}

int cmd_fit_codec(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  const fs::path data_dir = cfg.str_or("codec.data_dir", (root / "data").string());
  const std::vector<Trajectory> trajs = load_corpus(data_dir);
  const Normalization norm = Normalization::fit(trajs);

  Eigen::Index rows = 0;
  for (const Trajectory& t : trajs) rows += t.states.rows();
  Eigen::MatrixXd stacked(rows, trajs.front().dim());
  Eigen::Index at = 0;
  for (const Trajectory& t : trajs) {
    stacked.middleRows(at, t.states.rows()) = norm.apply(t.states);
    at += t.states.rows();
  }

  const int d = static_cast<int>(stacked.cols());
  const int p = static_cast<int>(cfg.integer_or("codec.p", std::min(4, d)));
  const LinearCodec codec = LinearCodec::fit(stacked, p);

  const fs::path dir = root / "codec";
  codec.save(dir);
  norm.save(dir);
  const double mse = codec.reconstruction_mse(stacked);
  std::ofstream csv(dir / "codec.csv");
  csv << "p,reconstruction_mse\n" << p << "," << fmt_double(mse) << "\n";
  if (!csv) throw std::runtime_error("cannot write " + (dir / "codec.csv").string());
  write_manifest(dir, "fit-codec", cfg, seed);
  std::cout << "fit-codec: p=" << p << " reconstruction_mse=" << fmt_double(mse) << " -> "
            << dir.string() << "\n";
  return 0;
}

int cmd_train(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  Pipeline pipe = load_pipeline(cfg, root);
  const PathSchedule schedule = PathSchedule::from_config(cfg);
  const ModelConfig mc = ModelConfig::from_config(cfg, pipe.codec.latent_dim());
  TrainConfig tc = TrainConfig::from_config(cfg);
  if (!cfg.has("train.seed")) tc.seed = seed;

  const fs::path dir = root / "train";
  fs::create_directories(dir);
  VectorFieldModel model(mc);
  const TrainTrace trace = train(model, tc, pipe.dataset, pipe.codec, schedule, dir);
  model.save(dir);
  trace.to_csv(dir / "trace.csv");
  write_manifest(dir, "train", cfg, tc.seed);
  const double last = trace.size() == 0 ? 0.0 : trace.loss.back();
  std::cout << "train: " << tc.iterations << " iterations on " << pipe.dataset.size()
            << " trajectories, last loss " << fmt_double(last) << " -> " << dir.string() << "\n";
  return 0;
}

int cmd_forecast(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  Pipeline pipe = load_pipeline(cfg, root);
  const fs::path model_dir = cfg.str_or("forecast.model_dir", (root / "train").string());
  const VectorFieldModel model = VectorFieldModel::load(model_dir);
  if (model.config().latent_dim != pipe.codec.latent_dim())
    throw std::invalid_argument("model latent dimension does not match codec");

  SamplerConfig sc = SamplerConfig::from_config(cfg);
  if (!cfg.has("sampler.seed")) sc.seed = seed;
  const int traj = static_cast<int>(cfg.integer_or("forecast.traj", 0));
  if (traj < 0 || traj >= pipe.dataset.size())
    throw std::invalid_argument("config: forecast.traj out of range");
  const double data_range = cfg.number_or("metrics.data_range", 2.0);
  const int field_h = static_cast<int>(cfg.integer_or("metrics.field_h", 0));
  const int field_w = static_cast<int>(cfg.integer_or("metrics.field_w", 0));

  const Eigen::MatrixXd prefix = pipe.dataset.prefix(traj);
  const Eigen::MatrixXd truth = pipe.dataset.suffix(traj);
  const ForecastReport report = rollout(make_vf(model), pipe.codec, prefix, pipe.dataset.l, sc,
                                        &truth, data_range, field_h, field_w);

  const fs::path dir = root / "forecast";
  fs::create_directories(dir);
  report.write_csv(dir / "forecast.csv");
  report.write_tensors(dir);
  write_matrix(dir / "truth", "truth", truth);
  write_manifest(dir, "forecast", cfg, sc.seed);
  std::cout << "forecast: traj " << traj << ", horizon " << pipe.dataset.l << ", ensemble "
            << sc.ensemble << ": rfne=" << fmt_double(report.aggregate.rfne)
            << " mse=" << fmt_double(report.aggregate.mse) << " -> " << dir.string() << "\n";
  return 0;
}

int cmd_sweep(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  if (cfg.str_or("path.kind", "") != "bridge")
    throw std::invalid_argument("config: sweep requires path.kind = \"bridge\" "
                                "(sweep.sigmas varies the bridge sigma)");
  const std::vector<double> sigmas = split_numbers(list_text(cfg, "sweep.sigmas", "0,0.01,0.1"));
  const std::vector<std::string> schemes = split_list(list_text(cfg, "sweep.schemes", "euler,rk4"));
  const std::vector<double> steps = split_numbers(list_text(cfg, "sweep.steps", "5,10,20"));
  for (const std::string& s : schemes) scheme_from_name(s);  // validate early

  Pipeline pipe = load_pipeline(cfg, root);
  const ModelConfig mc = ModelConfig::from_config(cfg, pipe.codec.latent_dim());
  TrainConfig tc = TrainConfig::from_config(cfg);
  if (!cfg.has("train.seed")) tc.seed = seed;
  SamplerConfig sc_base = SamplerConfig::from_config(cfg);
  if (!cfg.has("sampler.seed")) sc_base.seed = seed;
  const int traj = static_cast<int>(cfg.integer_or("forecast.traj", 0));
  if (traj < 0 || traj >= pipe.dataset.size())
    throw std::invalid_argument("config: forecast.traj out of range");
  const double data_range = cfg.number_or("metrics.data_range", 2.0);
  const int field_h = static_cast<int>(cfg.integer_or("metrics.field_h", 0));
  const int field_w = static_cast<int>(cfg.integer_or("metrics.field_w", 0));
  const Eigen::MatrixXd prefix = pipe.dataset.prefix(traj);
  const Eigen::MatrixXd truth = pipe.dataset.suffix(traj);

  const fs::path dir = root / "sweep";
  fs::create_directories(dir);
  std::ofstream csv(dir / "sweep.csv");
  csv << "sigma,scheme,steps,mse,rfne,psnr,ssim,pearson\n";

  for (const double sigma : sigmas) {
    Config variant = cfg;
    variant.set_override("path.sigma=" + fmt_double(sigma));
    const PathSchedule schedule = PathSchedule::from_config(variant);
    VectorFieldModel model(mc);
    train(model, tc, pipe.dataset, pipe.codec, schedule);
    const VfFn vf = make_vf(model);
    for (const std::string& scheme : schemes) {
      for (const double n_steps : steps) {
        SamplerConfig sc = sc_base;
        sc.scheme = scheme_from_name(scheme);
        sc.steps = static_cast<int>(n_steps);
        const ForecastReport report = rollout(vf, pipe.codec, prefix, pipe.dataset.l, sc,
                                              &truth, data_range, field_h, field_w);
        const MetricSet& m = report.aggregate;
        csv << fmt_double(sigma) << "," << scheme << "," << sc.steps << ","
            << fmt_double(m.mse) << "," << fmt_double(m.rfne) << "," << fmt_double(m.psnr)
            << "," << fmt_double(m.ssim) << "," << fmt_double(m.pearson) << "\n";
      }
    }
  }
  if (!csv) throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
  csv.close();
  write_manifest(dir, "sweep", cfg, seed);
  std::cout << "sweep: " << sigmas.size() * schemes.size() * steps.size() << " cells -> "
            << (dir / "sweep.csv").string() << "\n";
  return 0;
}

// Tensor files are addressed by stem (`x` -> `x.f64` + `x.json`); accept the
// `.f64` form too since that is what a directory listing shows.
fs::path tensor_stem(const std::string& path) {
  fs::path p = path;
  if (p.extension() == ".f64") p.replace_extension();
  return p;
}

int cmd_metrics(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  const Eigen::MatrixXd pred = read_matrix(tensor_stem(cfg.str("metrics.pred")));
  const Eigen::MatrixXd truth = read_matrix(tensor_stem(cfg.str("metrics.truth")));
  const double data_range = cfg.number_or("metrics.data_range", 2.0);
  const MetricSet m = compute_metrics(pred, truth, data_range);

  const fs::path dir = root / "metrics";
  fs::create_directories(dir);
  std::ofstream csv(dir / "metrics.csv");
  csv << "mse,rfne,psnr,ssim,pearson\n"
      << fmt_double(m.mse) << "," << fmt_double(m.rfne) << "," << fmt_double(m.psnr) << ","
      << fmt_double(m.ssim) << "," << fmt_double(m.pearson) << "\n";
  if (!csv) throw std::runtime_error("cannot write " + (dir / "metrics.csv").string());
  write_manifest(dir, "metrics", cfg, seed);
  std::cout << "metrics: mse=" << fmt_double(m.mse) << " rfne=" << fmt_double(m.rfne)
            << " psnr=" << fmt_double(m.psnr) << " ssim=" << fmt_double(m.ssim)
            << " pearson=" << fmt_double(m.pearson) << "\n";
  return 0;
}

struct CheckRow {
  std::string name;
  std::string detail;
  double value = 0.0;
  double threshold = 0.0;
  std::string status;  // PASS / FAIL / INCONCLUSIVE
};

int cmd_verify(const Config& cfg, const fs::path& root, std::uint64_t seed) {
  const auto paths = static_cast<std::size_t>(cfg.integer_or("verify.paths", 20000));
  const auto samples = static_cast<std::size_t>(cfg.integer_or("verify.samples", 10000));
  const std::uint64_t vseed =
      static_cast<std::uint64_t>(cfg.integer_or("verify.seed", static_cast<long long>(seed)));
  std::vector<CheckRow> rows;

  // Check 1: RK4 integration of the closed-form VF reproduces the flow map.
  {
    struct Case {
      PathKind kind;
      std::map<std::string, double> params;
      double t_hi;
      double t_lo;
    };
    const std::vector<Case> cases = {
        {PathKind::bridge, {{"sigma_min", 0.1}, {"sigma", 0.2}}, 1.0, 0.0},
        {PathKind::ot, {{"eps_min", 0.1}}, 1.0, 0.0},
        {PathKind::ve, {{"sigma_min", 0.01}, {"sigma_max", 0.1}}, 0.999, 0.0},
        {PathKind::vp, {{"beta_min", 0.1}, {"beta_max", 20.0}}, 0.999, 0.0},
        {PathKind::stochastic_interpolant, {{"eps", 0.5}}, 0.999, 0.001}};
    double worst = 0.0;
    Rng rng(derive_seed(vseed, 777));
    for (const Case& c : cases) {
      const PathSchedule schedule = PathSchedule::make(c.kind, c.params);
      for (int draw = 0; draw < 4; ++draw) {
        const ConditionPair pair(rng.normal_vector(3), rng.normal_vector(3));
        const Eigen::VectorXd xi = rng.normal_vector(3);
        for (const double t_end : {0.25, 0.5, c.t_hi}) {
          const int steps = std::max(1, static_cast<int>(20000 * (t_end - c.t_lo)));
          worst = std::max(worst,
                           flow_map_error(schedule, pair, xi, c.t_lo, t_end, steps));
        }
      }
    }
    rows.push_back({"flow_map", "max L2 error, RK4 vs closed form, 5 schedules", worst, 1e-5,
                    worst < 1e-5 ? "PASS" : "FAIL"});
  }

  // Check 2: continuity-equation residual on default grids.
  {
    const std::vector<PathSchedule> schedules = {
        PathSchedule::make(PathKind::bridge, {{"sigma_min", 0.2}, {"sigma", 0.3}}),
        PathSchedule::make(PathKind::ot, {{"eps_min", 0.2}}),
        PathSchedule::make(PathKind::ve, {{"sigma_min", 0.3}, {"sigma_max", 1.0}}),
        PathSchedule::make(PathKind::vp, {{"beta_min", 0.1}, {"beta_max", 20.0}}),
        PathSchedule::make(PathKind::stochastic_interpolant, {{"eps", 0.5}})};
    double worst = 0.0;
    for (const PathSchedule& s : schedules)
      worst = std::max(worst,
                       continuity_residual(s, -0.2, 0.9, default_continuity_grid(s.kind())));
    rows.push_back({"continuity", "max relative residual over 5 default grids", worst, 1e-3,
                    worst < 1e-3 ? "PASS" : "FAIL"});
  }

  // Checks 3 and 4: linear-SDE moments (with the t->1 limit) and the
  // alternative SDE, including cross-agreement of their marginal variances.
  {
    Eigen::VectorXd z0(1), z1(1);
    z0 << -0.3;
    z1 << 0.7;
    // sigma_min << sigma keeps the two SDE readings' marginals within MC
    // error of each other, and 0.03 (rather than smaller) keeps the Euler
    // bias of the alternative reading's c'(t) start-up well under one SE.
    const std::vector<double> ts = {0.25, 0.5, 0.75};
    const SdeMomentReport main_report =
        sde_moment_check(0.03, 1.0, z0, z1, ts, paths, 1e-4, derive_seed(vseed, 31));
    const SdeMomentReport limit_report = sde_moment_check(
        0.1, 0.2, z0, z1, {}, paths, 1e-4, derive_seed(vseed, 32), {0.98, 0.99});
    double worst_sigmas = 0.0;
    for (const MomentCheckpoint& cp : main_report.checkpoints) {
      for (Eigen::Index j = 0; j < cp.mean.size(); ++j)
        worst_sigmas = std::max(
            worst_sigmas, std::abs(cp.mean(j) - cp.mean_expected(j)) / cp.mean_se(j));
      worst_sigmas =
          std::max(worst_sigmas, std::abs(cp.var - cp.var_expected) / cp.var_se);
      worst_sigmas =
          std::max(worst_sigmas, std::abs(cp.mt_var - cp.mt_var_expected) / cp.mt_var_se);
    }
    const double limit_rel =
        std::abs(limit_report.limit_estimate - limit_report.limit_expected) /
        limit_report.limit_expected;
    const bool pass3 = worst_sigmas <= 3.0 && limit_rel <= 0.05;
    rows.push_back({"sde_moments",
                    "worst |empirical-analytic|/SE; limit rel err " + fmt_double(limit_rel),
                    worst_sigmas, 3.0, pass3 ? "PASS" : "FAIL"});

    const SdeMomentReport alt_report =
        alt_sde_check(0.03, 1.0, z0, z1, ts, paths, 1e-4, derive_seed(vseed, 33));
    double worst_alt = 0.0;
    for (const MomentCheckpoint& cp : alt_report.checkpoints) {
      for (Eigen::Index j = 0; j < cp.mean.size(); ++j)
        worst_alt =
            std::max(worst_alt, std::abs(cp.mean(j) - cp.mean_expected(j)) / cp.mean_se(j));
      worst_alt = std::max(worst_alt, std::abs(cp.var - cp.var_expected) / cp.var_se);
    }
    // Marginal cross-agreement between the two SDE readings.
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const MomentCheckpoint& a = main_report.checkpoints[i];
      const MomentCheckpoint& b = alt_report.checkpoints[i];
      const double se = std::sqrt(a.var_se * a.var_se + b.var_se * b.var_se);
      worst_alt = std::max(worst_alt, std::abs(a.var - b.var) / se);
    }
    rows.push_back({"alt_sde", "worst |empirical-analytic|/SE incl. cross-agreement",
                    worst_alt, 3.0, worst_alt <= 3.0 ? "PASS" : "FAIL"});
  }

  // Check 5: vector-field variance comparison in both regimes.
  {
    const VarianceReport corr =
        vf_variance_compare(0.99, 1.0, 0.1, 0.02, {0.25}, 4, samples, derive_seed(vseed, 41));
    const VarianceReport uncorr =
        vf_variance_compare(0.0, 1.0, 0.1, 0.02, {0.25}, 4, samples, derive_seed(vseed, 42));
    const bool corr_ok = corr.condition_holds && corr.points[0].verdict == "bridge_lower";
    const bool uncorr_ok = !uncorr.condition_holds &&
                           uncorr.points[0].var_u_closed > uncorr.points[0].var_ot_closed;
    std::string status = corr_ok && uncorr_ok ? "PASS" : "FAIL";
    if (corr.points[0].verdict == "inconclusive") status = "INCONCLUSIVE";
    rows.push_back({"variance_compare",
                    "rho=0.99 verdict " + corr.points[0].verdict + ", rho=0 reversed by closed form",
                    corr.points[0].var_ot - corr.points[0].var_u, 0.0, status});
  }

  const fs::path dir = root / "verify";
  fs::create_directories(dir);
  std::ofstream csv(dir / "checks.csv");
  csv << "check,detail,value,threshold,status\n";
  std::ofstream summary(dir / "summary.txt");
  bool any_fail = false;
  int passed = 0;
  for (const CheckRow& row : rows) {
    csv << row.name << ",\"" << row.detail << "\"," << fmt_double(row.value) << ","
        << fmt_double(row.threshold) << "," << row.status << "\n";
    summary << row.status << " " << row.name << ": " << row.detail
            << " (value " << fmt_double(row.value) << ")\n";
    std::cout << row.status << " " << row.name << "\n";
    any_fail = any_fail || row.status == "FAIL";
    passed += row.status == "PASS" ? 1 : 0;
  }
  summary << "verify: " << passed << "/" << rows.size() << " checks passed\n";
  if (!csv || !summary) throw std::runtime_error("cannot write verify outputs");
  csv.close();
  summary.close();
  write_manifest(dir, "verify", cfg, vseed);
  std::cout << "verify: " << passed << "/" << rows.size() << " checks passed -> "
            << dir.string() << "\n";
  return any_fail ? 3 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Gaussian probability-path flow matching for latent-space forecasting"};
  app.require_subcommand(0);

  std::string command, config_path, out_flag;
  std::vector<std::string> overrides;
  long long seed_flag = 0;
  bool seed_given = false;
  int jobs = 0;

  app.add_option("command", command, "gen-data|fit-codec|train|forecast|sweep|verify|metrics")
      ->required();
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--set", overrides, "dotted-key override key=value (repeatable)");
  app.add_option("--seed", seed_flag, "global seed override")->each([&](const std::string&) {
    seed_given = true;
  });
  app.add_option("--jobs", jobs, "worker cap (0 = hardware)");
  app.add_option("--out", out_flag, "output root directory");

  std::vector<std::string> argv_store = args;
  argv_store.insert(argv_store.begin(), "bridgeflow");
  std::vector<char*> argv;
  argv.reserve(argv_store.size());
  for (std::string& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = Config::parse_file(config_path);
    for (const std::string& assignment : overrides) cfg.set_override(assignment);
    if (seed_given) cfg.set_override("seed=" + std::to_string(seed_flag));
    check_known_keys(cfg);
    const auto seed = static_cast<std::uint64_t>(cfg.integer_or("seed", 0));
    if (jobs < 0) throw std::invalid_argument("usage: --jobs must be >= 0");
    if (jobs > 0) set_max_jobs(jobs);

    const fs::path root = resolve_out_root(cfg, out_flag);
    fs::create_directories(root);

    if (command == "gen-data") return cmd_gen_data(cfg, root, seed);
    if (command == "fit-codec") return cmd_fit_codec(cfg, root, seed);
    if (command == "train") return cmd_train(cfg, root, seed);
    if (command == "forecast") return cmd_forecast(cfg, root, seed);
    if (command == "sweep") return cmd_sweep(cfg, root, seed);
    if (command == "verify") return cmd_verify(cfg, root, seed);
    if (command == "metrics") return cmd_metrics(cfg, root, seed);
    std::cerr << "usage error: unknown command '" << command << "'\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bridgeflow
