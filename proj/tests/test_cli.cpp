// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bridgeflow/cli.hpp"
#include "bridgeflow/config.hpp"
#include "bridgeflow/metrics.hpp"
#include "bridgeflow/parallel.hpp"
#include "bridgeflow/tensorfile.hpp"
#include "bridgeflow/version.hpp"

using namespace bridgeflow;
namespace fs = std::filesystem;

namespace {

struct TmpDir {
  fs::path path;
  explicit TmpDir(const std::string& tag) {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("bridgeflow_cli_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TmpDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& sub) const { return path / sub; }
};

/// Captures stdout/stderr for the duration of one run_cli call.
struct Capture {
  std::ostringstream out, err;
  std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
  ~Capture() {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
  }
};

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run(const std::vector<std::string>& args) {
  Capture cap;
  RunResult r;
  r.code = run_cli(args);
  r.out = cap.out.str();
  r.err = cap.err.str();
  return r;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
  REQUIRE(static_cast<bool>(out));
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

/// Small end-to-end configuration: 6 oscillator trajectories, 2-d latent.
std::string base_config() {
  return "system.kind = \"damped_oscillator\"\n"
         "system.count = 6\n"
         "system.m = 12\n"
         "system.dt = 0.1\n"
         "codec.p = 2\n"
         "model.width = 8\n"
         "model.depth = 1\n"
         "model.embed_dim = 4\n"
         "train.iterations = 30\n"
         "train.batch = 4\n"
         "train.lr = 0.002\n"
         "train.k = 3\n"
         "train.l = 4\n"
         "path.kind = \"bridge\"\n"
         "path.sigma_min = 0.1\n"
         "path.sigma = 0.1\n"
         "sampler.scheme = \"rk4\"\n"
         "sampler.steps = 4\n"
         "sampler.sigma_sam = 0.1\n"
         "sampler.ensemble = 2\n";
}

nlohmann::json load_manifest(const fs::path& dir) {
  return nlohmann::json::parse(read_text(dir / "manifest.json"));
}

}  // namespace

TEST_CASE("cli reports usage problems on exit code 1 and help on 0") {
  TmpDir tmp("usage");
  const RunResult help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-data") != std::string::npos);

  CHECK(run({}).code == 1);

  const RunResult unknown = run({"frobnicate", "--out", (tmp / "out").string()});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("unknown command") != std::string::npos);

  CHECK(run({"gen-data", "--no-such-flag"}).code == 1);
  CHECK(run({"gen-data", "--jobs", "-1", "--set", "system.kind=damped_oscillator"}).code == 1);

  const RunResult typo = run({"gen-data", "--set", "sytem.kind=damped_oscillator"});
  CHECK(typo.code == 1);
  CHECK(typo.err.find("config error") != std::string::npos);
}

TEST_CASE("cli pipeline writes artifacts and reconstructible manifests") {
  TmpDir tmp("pipeline");
  const fs::path cfg_file = tmp / "run.cfg";
  write_text(cfg_file, base_config());
  const std::string root = (tmp / "out").string();
  const std::vector<std::string> common = {"--config", cfg_file.string(), "--seed", "9",
                                           "--out", root};

  auto with = [&](std::initializer_list<std::string> head) {
    std::vector<std::string> args(head);
    args.insert(args.end(), common.begin(), common.end());
    return args;
  };

  const RunResult gen = run(with({"gen-data"}));
  CAPTURE(gen.err);
  REQUIRE(gen.code == 0);
  CHECK(fs::exists(tmp / "out/data/traj_0000.f64"));
  CHECK(fs::exists(tmp / "out/data/traj_0005.f64"));
  CHECK(fs::exists(tmp / "out/data/corpus.json"));

  // The manifest pins command, seed, version, and a config whose canonical
  // text re-hashes to the recorded hash.
  const nlohmann::json manifest = load_manifest(tmp / "out/data");
  CHECK(manifest.at("command") == "gen-data");
  CHECK(manifest.at("seed") == 9);
  CHECK(manifest.at("version") == kVersion);
  const Config parsed = Config::parse_string(manifest.at("config").get<std::string>());
  CHECK(parsed.hash() == manifest.at("config_hash").get<std::string>());
  CHECK(parsed.integer_or("seed", 0) == 9);  // --seed lands in the config

  const RunResult fit = run(with({"fit-codec"}));
  CAPTURE(fit.err);
  REQUIRE(fit.code == 0);
  CHECK(fs::exists(tmp / "out/codec/codec_basis.f64"));
  CHECK(fs::exists(tmp / "out/codec/codec_mean.f64"));
  const auto codec_lines = lines_of(read_text(tmp / "out/codec/codec.csv"));
  REQUIRE(codec_lines.size() == 2);
  CHECK(codec_lines[0] == "p,reconstruction_mse");
  CHECK(codec_lines[1].rfind("2,", 0) == 0);

  const RunResult train_run = run(with({"train"}));
  CAPTURE(train_run.err);
  REQUIRE(train_run.code == 0);
  CHECK(fs::exists(tmp / "out/train/model_params.f64"));
  CHECK(fs::exists(tmp / "out/train/model_meta.json"));
  const auto trace_lines = lines_of(read_text(tmp / "out/train/trace.csv"));
  REQUIRE(trace_lines.size() == 31);  // header + one row per iteration
  CHECK(trace_lines[0] == "iteration,epoch,loss,lr,wall_ms");
  CHECK(load_manifest(tmp / "out/train").at("seed") == 9);

  const RunResult fc = run(with({"forecast"}));
  CAPTURE(fc.err);
  REQUIRE(fc.code == 0);
  const auto fc_lines = lines_of(read_text(tmp / "out/forecast/forecast.csv"));
  REQUIRE(fc_lines.size() == 5);  // header + horizon l = 4
  CHECK(fc_lines[0] == "step,mse,rfne,psnr,ssim,pearson");
  CHECK(fc_lines[1].rfind("1,", 0) == 0);
  CHECK(fs::exists(tmp / "out/forecast/member_000.f64"));
  CHECK(fs::exists(tmp / "out/forecast/member_001.f64"));
  CHECK_FALSE(fs::exists(tmp / "out/forecast/member_002.f64"));
  CHECK(fs::exists(tmp / "out/forecast/ensemble_mean.f64"));
  CHECK(fs::exists(tmp / "out/forecast/truth.f64"));

  // metrics on the forecast artifacts agrees with the library computation;
  // the .f64 suffix form is accepted.
  const RunResult met = run(with({"metrics", "--set",
                                  "metrics.pred=" + (tmp / "out/forecast/ensemble_mean.f64").string(),
                                  "--set",
                                  "metrics.truth=" + (tmp / "out/forecast/truth").string()}));
  CAPTURE(met.err);
  REQUIRE(met.code == 0);
  const auto met_lines = lines_of(read_text(tmp / "out/metrics/metrics.csv"));
  REQUIRE(met_lines.size() == 2);
  CHECK(met_lines[0] == "mse,rfne,psnr,ssim,pearson");
  const Eigen::MatrixXd pred = read_matrix(tmp / "out/forecast/ensemble_mean");
  const Eigen::MatrixXd truth = read_matrix(tmp / "out/forecast/truth");
  const MetricSet expect = compute_metrics(pred, truth, 2.0);
  std::istringstream row(met_lines[1]);
  std::string cell;
  std::vector<double> got;
  while (std::getline(row, cell, ',')) got.push_back(std::stod(cell));
  REQUIRE(got.size() == 5);
  CHECK(got[0] == expect.mse);  // %.17g round-trips doubles exactly
  CHECK(got[1] == expect.rfne);
  CHECK(got[2] == expect.psnr);
  CHECK(got[3] == expect.ssim);
  CHECK(got[4] == expect.pearson);

  // Re-running the forecast against the same inputs is byte-reproducible,
  // independent of the worker cap.
  const fs::path root2 = tmp / "out2";
  const std::vector<std::string> reuse = {
      "forecast", "--config", cfg_file.string(), "--seed", "9", "--out", root2.string(),
      "--set", "train.data_dir=" + (tmp / "out/data").string(),
      "--set", "train.codec_dir=" + (tmp / "out/codec").string(),
      "--set", "forecast.model_dir=" + (tmp / "out/train").string()};
  REQUIRE(run(reuse).code == 0);
  CHECK(read_text(root2 / "forecast/forecast.csv") ==
        read_text(tmp / "out/forecast/forecast.csv"));
  CHECK(read_text(root2 / "forecast/ensemble_mean.f64") ==
        read_text(tmp / "out/forecast/ensemble_mean.f64"));

  std::vector<std::string> jobs_args = reuse;
  jobs_args.insert(jobs_args.end(), {"--jobs", "2"});
  const fs::path root3 = tmp / "out3";
  jobs_args[6] = root3.string();
  REQUIRE(run(jobs_args).code == 0);
  set_max_jobs(1);
  CHECK(read_text(root3 / "forecast/ensemble_mean.f64") ==
        read_text(tmp / "out/forecast/ensemble_mean.f64"));
}

TEST_CASE("cli resolves seed and output root with documented precedence") {
  TmpDir tmp("roots");
  const std::string gen = "system.kind = \"damped_oscillator\"\nsystem.count = 2\n"
                          "system.m = 6\nseed = 7\n";
  const fs::path plain = tmp / "plain.cfg";
  write_text(plain, gen);
  const fs::path with_dir = tmp / "withdir.cfg";
  write_text(with_dir, gen + "out_dir = \"" + (tmp / "cfg_root").string() + "\"\n");

  // --out beats config out_dir
  REQUIRE(run({"gen-data", "--config", with_dir.string(), "--out",
               (tmp / "flag_root").string()}).code == 0);
  CHECK(fs::exists(tmp / "flag_root/data/manifest.json"));
  CHECK_FALSE(fs::exists(tmp / "cfg_root"));

  // config out_dir beats the environment
  setenv("BRIDGEFLOW_OUT", (tmp / "env_root").string().c_str(), 1);
  REQUIRE(run({"gen-data", "--config", with_dir.string()}).code == 0);
  CHECK(fs::exists(tmp / "cfg_root/data/manifest.json"));
  CHECK_FALSE(fs::exists(tmp / "env_root"));

  // the environment is used when nothing else is given
  REQUIRE(run({"gen-data", "--config", plain.string()}).code == 0);
  CHECK(fs::exists(tmp / "env_root/data/manifest.json"));
  unsetenv("BRIDGEFLOW_OUT");

  // config seed applies unless --seed overrides it
  CHECK(load_manifest(tmp / "flag_root/data").at("seed") == 7);
  REQUIRE(run({"gen-data", "--config", plain.string(), "--seed", "42", "--out",
               (tmp / "seed_root").string()}).code == 0);
  CHECK(load_manifest(tmp / "seed_root/data").at("seed") == 42);
}

TEST_CASE("cli distinguishes config errors from runtime failures") {
  TmpDir tmp("errors");
  const fs::path cfg_file = tmp / "run.cfg";
  write_text(cfg_file, base_config());
  const std::string root = (tmp / "out").string();
  REQUIRE(run({"gen-data", "--config", cfg_file.string(), "--out", root}).code == 0);
  REQUIRE(run({"fit-codec", "--config", cfg_file.string(), "--out", root}).code == 0);

  // zero-iteration training is valid and leaves an initialized model
  const RunResult none = run({"train", "--config", cfg_file.string(), "--out", root,
                              "--set", "train.iterations=0"});
  CHECK(none.code == 0);
  CHECK(lines_of(read_text(tmp / "out/train/trace.csv")).size() == 1);
  CHECK(fs::exists(tmp / "out/train/model_params.f64"));

  // a diverging run is a runtime failure, not a usage error
  const RunResult diverged = run({"train", "--config", cfg_file.string(), "--out", root,
                                  "--set", "train.lr=1e6"});
  CHECK(diverged.code == 2);
  CHECK(diverged.err.find("diverged") != std::string::npos);

  const RunResult bad_traj = run({"forecast", "--config", cfg_file.string(), "--out", root,
                                  "--set", "forecast.traj=99"});
  CHECK(bad_traj.code == 1);
  CHECK(bad_traj.err.find("config error") != std::string::npos);

  const RunResult missing = run({"metrics", "--out", root, "--set",
                                 "metrics.pred=" + (tmp / "nope").string(), "--set",
                                 "metrics.truth=" + (tmp / "nope").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("cli sweep writes one row per cell and requires the bridge path") {
  TmpDir tmp("sweep");
  const fs::path cfg_file = tmp / "run.cfg";
  write_text(cfg_file, base_config());
  const std::string root = (tmp / "out").string();
  REQUIRE(run({"gen-data", "--config", cfg_file.string(), "--out", root}).code == 0);
  REQUIRE(run({"fit-codec", "--config", cfg_file.string(), "--out", root}).code == 0);

  const RunResult sweep = run({"sweep", "--config", cfg_file.string(), "--out", root,
                               "--seed", "3",
                               "--set", "sweep.sigmas=0.25",
                               "--set", "sweep.schemes=rk4",
                               "--set", "sweep.steps=3"});
  CAPTURE(sweep.err);
  REQUIRE(sweep.code == 0);
  const auto rows = lines_of(read_text(tmp / "out/sweep/sweep.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == "sigma,scheme,steps,mse,rfne,psnr,ssim,pearson");
  CHECK(rows[1].rfind("0.25,rk4,3,", 0) == 0);

  const RunResult not_bridge = run({"sweep", "--config", cfg_file.string(), "--out", root,
                                    "--set", "path.kind=ot", "--set", "path.eps_min=0.1"});
  CHECK(not_bridge.code == 1);
  CHECK(not_bridge.err.find("bridge") != std::string::npos);
}

TEST_CASE("cli verify passes all desk checks at the default budget") {
  TmpDir tmp("verify");
  const RunResult r = run({"verify", "--out", (tmp / "out").string()});
  CAPTURE(r.err);
  REQUIRE(r.code == 0);
  const auto check_rows = lines_of(read_text(tmp / "out/verify/checks.csv"));
  REQUIRE(check_rows.size() == 6);  // header + 5 checks
  CHECK(check_rows[0] == "check,detail,value,threshold,status");
  for (std::size_t i = 1; i < check_rows.size(); ++i)
    CHECK(check_rows[i].find(",PASS") != std::string::npos);
  const std::string summary = read_text(tmp / "out/verify/summary.txt");
  CHECK(summary.find("verify: 5/5 checks passed") != std::string::npos);
  const std::vector<std::string> names = {"flow_map", "continuity", "sde_moments", "alt_sde",
                                          "variance_compare"};
  for (const std::string& name : names)
    CHECK(r.out.find("PASS " + name) != std::string::npos);
}
