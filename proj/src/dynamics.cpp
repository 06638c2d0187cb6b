// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bridgeflow/parallel.hpp"
#include "bridgeflow/rng.hpp"
#include "bridgeflow/tensorfile.hpp"

namespace bridgeflow {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Eigen::VectorXd rk4_step(const Eigen::VectorXd& y, double dt,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f) {
  const Eigen::VectorXd k1 = f(y);
  const Eigen::VectorXd k2 = f(y + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(y + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One conservative forward-Euler step with zero-flux boundaries (1D).
void heat1d_step(Eigen::VectorXd& u, double kappa, double dx, double dt) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd flux(n + 1);  // flux[i] sits between cells i-1 and i
  flux(0) = 0.0;
  flux(n) = 0.0;
  for (int i = 1; i < n; ++i) flux(i) = -kappa * (u(i) - u(i - 1)) / dx;
  for (int i = 0; i < n; ++i) u(i) -= dt * (flux(i + 1) - flux(i)) / dx;
}

// Same in 2D on an n x n grid stored row-major.
void heat2d_step(Eigen::VectorXd& u, int n, double kappa, double dx, double dt) {
  Eigen::VectorXd fx((n + 1) * n), fy(n * (n + 1));
  for (int r = 0; r < n; ++r) {
    for (int i = 0; i <= n; ++i) {
      const double f = (i == 0 || i == n)
                           ? 0.0
                           : -kappa * (u(r * n + i) - u(r * n + i - 1)) / dx;
      fx(r * (n + 1) + i) = f;
    }
  }
  for (int r = 0; r <= n; ++r) {
    for (int i = 0; i < n; ++i) {
      const double f = (r == 0 || r == n)
                           ? 0.0
                           : -kappa * (u(r * n + i) - u((r - 1) * n + i)) / dx;
      fy(r * n + i) = f;
    }
  }
  for (int r = 0; r < n; ++r)
    for (int i = 0; i < n; ++i)
      u(r * n + i) -= dt *
                      ((fx(r * (n + 1) + i + 1) - fx(r * (n + 1) + i)) +
                       (fy((r + 1) * n + i) - fy(r * n + i))) /
                      dx;
}

Eigen::VectorXd initial_state(const SystemSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case SystemKind::damped_oscillator: {
      const double amp = rng.uniform(spec.amp_lo, spec.amp_hi);
      const double phase = rng.uniform(spec.phase_lo, spec.phase_hi);
      Eigen::VectorXd y(2);
      y << amp * std::cos(phase), -amp * spec.omega * std::sin(phase);
      return y;
    }
    case SystemKind::lorenz63: {
      Eigen::VectorXd y(3);
      for (int i = 0; i < 3; ++i)
        y(i) = spec.ic_center[i] + spec.ic_jitter * rng.uniform(-1.0, 1.0);
      return y;
    }
    case SystemKind::heat1d: {
      const int n = spec.grid;
      const double dx = spec.length / n;
      Eigen::VectorXd amps(spec.ic_modes);
      for (int j = 0; j < spec.ic_modes; ++j) amps(j) = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd u(n);
      for (int i = 0; i < n; ++i) {
        const double x = (i + 0.5) * dx;
        double value = spec.ic_offset;
        for (int j = 0; j < spec.ic_modes; ++j)
          value += spec.ic_scale * amps(j) * std::cos(kPi * (j + 1) * x / spec.length);
        u(i) = value;
      }
      return u;
    }
    case SystemKind::heat2d: {
      const int n = spec.grid;
      const double dx = spec.length / n;
      Eigen::MatrixXd amps(spec.ic_modes, spec.ic_modes);
      for (int j = 0; j < spec.ic_modes; ++j)
        for (int k = 0; k < spec.ic_modes; ++k) amps(j, k) = rng.uniform(-1.0, 1.0);
      Eigen::VectorXd u(n * n);
      for (int r = 0; r < n; ++r) {
        const double y = (r + 0.5) * dx;
        for (int i = 0; i < n; ++i) {
          const double x = (i + 0.5) * dx;
          double value = spec.ic_offset;
          for (int j = 0; j < spec.ic_modes; ++j)
            for (int k = 0; k < spec.ic_modes; ++k)
              value += spec.ic_scale * amps(j, k) *
                       std::cos(kPi * (j + 1) * x / spec.length) *
                       std::cos(kPi * (k + 1) * y / spec.length);
          u(r * n + i) = value;
        }
      }
      return u;
    }
  }
  throw std::logic_error("unreachable system kind");
}

}  // namespace

SystemSpec SystemSpec::make(SystemKind kind) {
  SystemSpec spec;
  spec.kind = kind;
  if (kind == SystemKind::heat1d) spec.grid = 32;
  return spec;
}

SystemKind SystemSpec::kind_from_name(const std::string& name) {
  if (name == "damped_oscillator") return SystemKind::damped_oscillator;
  if (name == "lorenz63") return SystemKind::lorenz63;
  if (name == "heat1d") return SystemKind::heat1d;
  if (name == "heat2d") return SystemKind::heat2d;
  throw std::invalid_argument("unknown system kind: '" + name + "'");
}

std::string SystemSpec::name() const {
  switch (kind) {
    case SystemKind::damped_oscillator: return "damped_oscillator";
    case SystemKind::lorenz63: return "lorenz63";
    case SystemKind::heat1d: return "heat1d";
    case SystemKind::heat2d: return "heat2d";
  }
  throw std::logic_error("unreachable system kind");
}

SystemSpec SystemSpec::from_config(const Config& cfg, const std::string& table) {
  const std::string kind_key = table + ".kind";
  if (!cfg.has(kind_key)) throw std::invalid_argument("config: missing key: " + kind_key);
  SystemSpec spec = make(kind_from_name(cfg.str(kind_key)));

  static const std::set<std::string> osc = {"omega", "zeta", "amp_lo", "amp_hi",
                                            "phase_lo", "phase_hi"};
  static const std::set<std::string> lor = {"sigma", "rho", "beta", "ic_jitter"};
  static const std::set<std::string> heat = {"grid", "kappa", "length", "ic_modes",
                                             "ic_scale", "ic_offset"};
  static const std::set<std::string> corpus = {"kind", "count", "m", "dt"};

  const std::set<std::string>* allowed = nullptr;
  switch (spec.kind) {
    case SystemKind::damped_oscillator: allowed = &osc; break;
    case SystemKind::lorenz63: allowed = &lor; break;
    default: allowed = &heat; break;
  }
  for (const std::string& key : cfg.keys_with_prefix(table)) {
    const std::string sub = key.substr(table.size() + 1);
    if (corpus.count(sub)) continue;  // corpus-level keys handled by the caller
    if (!allowed->count(sub))
      throw std::invalid_argument("config: key '" + key + "' does not apply to system '" +
                                  spec.name() + "'");
    const double value = cfg.number(key);
    if (sub == "omega") spec.omega = value;
    else if (sub == "zeta") spec.zeta = value;
    else if (sub == "amp_lo") spec.amp_lo = value;
    else if (sub == "amp_hi") spec.amp_hi = value;
    else if (sub == "phase_lo") spec.phase_lo = value;
    else if (sub == "phase_hi") spec.phase_hi = value;
    else if (sub == "sigma") spec.lor_sigma = value;
    else if (sub == "rho") spec.lor_rho = value;
    else if (sub == "beta") spec.lor_beta = value;
    else if (sub == "ic_jitter") spec.ic_jitter = value;
    else if (sub == "grid") spec.grid = static_cast<int>(cfg.integer(key));
    else if (sub == "kappa") spec.kappa = value;
    else if (sub == "length") spec.length = value;
    else if (sub == "ic_modes") spec.ic_modes = static_cast<int>(cfg.integer(key));
    else if (sub == "ic_scale") spec.ic_scale = value;
    else if (sub == "ic_offset") spec.ic_offset = value;
  }
  return spec;
}

int SystemSpec::dim() const {
  switch (kind) {
    case SystemKind::damped_oscillator: return 2;
    case SystemKind::lorenz63: return 3;
    case SystemKind::heat1d: return grid;
    case SystemKind::heat2d: return grid * grid;
  }
  throw std::logic_error("unreachable system kind");
}

void SystemSpec::validate(double dt) const {
  if (!(dt > 0.0)) throw std::invalid_argument("system: dt must be > 0");
  if (kind == SystemKind::heat1d || kind == SystemKind::heat2d) {
    if (grid < 4) throw std::invalid_argument("system: grid size must be >= 4");
    if (!(kappa > 0.0) || !(length > 0.0))
      throw std::invalid_argument("system: kappa and length must be > 0");
    if (ic_modes < 1) throw std::invalid_argument("system: ic_modes must be >= 1");
    const double dx = length / grid;
    const double ratio = kappa * dt / (dx * dx);
    const double bound = kind == SystemKind::heat1d ? 0.25 : 0.125;
    if (ratio > bound + 1e-12)
      throw std::invalid_argument("system: explicit-scheme stability violated: kappa*dt/dx^2 = " +
                                  std::to_string(ratio) + " > " + std::to_string(bound));
  }
  if (kind == SystemKind::damped_oscillator && !(omega > 0.0))
    throw std::invalid_argument("system: omega must be > 0");
}

int SystemSpec::default_count() const {
  switch (kind) {
    case SystemKind::damped_oscillator: return 64;
    case SystemKind::lorenz63: return 32;
    default: return 16;
  }
}

int SystemSpec::default_m() const {
  switch (kind) {
    case SystemKind::damped_oscillator: return 64;
    case SystemKind::lorenz63: return 128;
    default: return 32;
  }
}

double SystemSpec::default_dt() const {
  switch (kind) {
    case SystemKind::damped_oscillator: return 0.1;
    case SystemKind::lorenz63: return 0.01;
    case SystemKind::heat1d: return 0.004;
    case SystemKind::heat2d: return 0.008;
  }
  throw std::logic_error("unreachable system kind");
}

void Trajectory::validate() const {
  if (m() < 3) throw std::invalid_argument("trajectory: needs at least 3 states");
  if (times.size() != states.rows())
    throw std::invalid_argument("trajectory: times/states length mismatch");
  if (!states.allFinite() || !times.allFinite())
    throw std::invalid_argument("trajectory: non-finite entries");
  for (int i = 0; i + 1 < m(); ++i)
    if (std::abs(times(i + 1) - times(i) - dt) > 1e-12)
      throw std::invalid_argument("trajectory: non-uniform time spacing");
}

Trajectory simulate(const SystemSpec& spec, std::uint64_t seed, int m, double dt) {
  spec.validate(dt);
  if (m < 3) throw std::invalid_argument("simulate: m must be >= 3");
  Rng rng(seed);
  Eigen::VectorXd y = initial_state(spec, rng);

  Trajectory traj;
  traj.system_id = spec.name() + "#" + std::to_string(seed);
  traj.dt = dt;
  traj.times.resize(m);
  traj.states.resize(m, y.size());

  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ode;
  if (spec.kind == SystemKind::damped_oscillator) {
    ode = [&spec](const Eigen::VectorXd& s) {
      Eigen::VectorXd d(2);
      d << s(1), -spec.omega * spec.omega * s(0) - 2.0 * spec.zeta * spec.omega * s(1);
      return d;
    };
  } else if (spec.kind == SystemKind::lorenz63) {
    ode = [&spec](const Eigen::VectorXd& s) {
      Eigen::VectorXd d(3);
      d << spec.lor_sigma * (s(1) - s(0)), s(0) * (spec.lor_rho - s(2)) - s(1),
          s(0) * s(1) - spec.lor_beta * s(2);
      return d;
    };
  }

  const double dx = spec.length / spec.grid;
  for (int i = 0; i < m; ++i) {
    traj.times(i) = i * dt;
    traj.states.row(i) = y.transpose();
    if (i + 1 == m) break;
    switch (spec.kind) {
      case SystemKind::damped_oscillator:
      case SystemKind::lorenz63: y = rk4_step(y, dt, ode); break;
      case SystemKind::heat1d: heat1d_step(y, spec.kappa, dx, dt); break;
      case SystemKind::heat2d: heat2d_step(y, spec.grid, spec.kappa, dx, dt); break;
    }
  }
  traj.validate();
  return traj;
}

std::vector<Trajectory> make_corpus(const SystemSpec& spec, int count, int m, double dt,
                                    std::uint64_t base_seed) {
  if (count < 1) throw std::invalid_argument("make_corpus: count must be >= 1");
  std::vector<Trajectory> trajs(count);
  parallel_for(count, [&](std::size_t i) {
    trajs[i] = simulate(spec, derive_seed(base_seed, i), m, dt);
  });
  return trajs;
}

void save_corpus(const std::vector<Trajectory>& trajs, const std::filesystem::path& dir) {
  if (trajs.empty()) throw std::invalid_argument("save_corpus: empty corpus");
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["count"] = trajs.size();
  meta["m"] = trajs.front().m();
  meta["d"] = trajs.front().dim();
  meta["dt"] = trajs.front().dt;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%04zu", i);
    write_matrix(dir / name, name, trajs[i].states);
    ids.push_back(trajs[i].system_id);
  }
  meta["system_ids"] = ids;
  std::ofstream out(dir / "corpus.json");
  out << meta.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_corpus: cannot write " + (dir / "corpus.json").string());
}

std::vector<Trajectory> load_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "corpus.json");
  if (!in) throw std::runtime_error("load_corpus: cannot open " + (dir / "corpus.json").string());
  nlohmann::json meta = nlohmann::json::parse(in);
  const std::size_t count = meta.at("count").get<std::size_t>();
  const double dt = meta.at("dt").get<double>();
  const auto ids = meta.at("system_ids").get<std::vector<std::string>>();
  if (ids.size() != count) throw std::runtime_error("load_corpus: corrupt corpus.json");
  std::vector<Trajectory> trajs(count);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%04zu", i);
    Trajectory& traj = trajs[i];
    traj.states = read_matrix(dir / name);
    traj.dt = dt;
    traj.system_id = ids[i];
    traj.times.resize(traj.states.rows());
    for (int j = 0; j < traj.m(); ++j) traj.times(j) = j * dt;
    traj.validate();
  }
  return trajs;
}

Normalization Normalization::fit(const std::vector<Trajectory>& trajs) {
  if (trajs.empty()) throw std::invalid_argument("Normalization::fit: empty corpus");
  const int d = trajs.front().dim();
  long total = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sum2 = Eigen::VectorXd::Zero(d);
  for (const Trajectory& traj : trajs) {
    if (traj.dim() != d) throw std::invalid_argument("Normalization::fit: mixed dimensions");
    sum += traj.states.colwise().sum().transpose();
    sum2 += traj.states.array().square().colwise().sum().matrix().transpose();
    total += traj.m();
  }
  Normalization norm;
  norm.mean = sum / static_cast<double>(total);
  norm.stddev = (sum2 / static_cast<double>(total) - norm.mean.array().square().matrix())
                    .cwiseMax(0.0)
                    .cwiseSqrt()
                    .cwiseMax(1e-12);
  Eigen::VectorXd max_abs = Eigen::VectorXd::Zero(d);
  for (const Trajectory& traj : trajs) {
    const Eigen::MatrixXd standardized =
        (traj.states.rowwise() - norm.mean.transpose()).array().rowwise() /
        norm.stddev.transpose().array();
    max_abs = max_abs.cwiseMax(standardized.cwiseAbs().colwise().maxCoeff().transpose());
  }
  norm.max_abs = max_abs.cwiseMax(1e-12);
  return norm;
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& x) const {
  return ((x.rowwise() - mean.transpose()).array().rowwise() /
          (stddev.cwiseProduct(max_abs)).transpose().array())
      .matrix();
}

Eigen::MatrixXd Normalization::invert(const Eigen::MatrixXd& y) const {
  return (y.array().rowwise() * (stddev.cwiseProduct(max_abs)).transpose().array()).matrix()
             .rowwise() +
         mean.transpose();
}

Eigen::VectorXd Normalization::apply_row(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(stddev.cwiseProduct(max_abs));
}

Eigen::VectorXd Normalization::invert_row(const Eigen::VectorXd& y) const {
  return y.cwiseProduct(stddev.cwiseProduct(max_abs)) + mean;
}

void Normalization::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  Eigen::MatrixXd packed(3, mean.size());
  packed.row(0) = mean.transpose();
  packed.row(1) = stddev.transpose();
  packed.row(2) = max_abs.transpose();
  write_matrix(dir / "normalization", "normalization", packed);
}

Normalization Normalization::load(const std::filesystem::path& dir) {
  const Eigen::MatrixXd packed = read_matrix(dir / "normalization");
  if (packed.rows() != 3) throw std::runtime_error("normalization tensor must have 3 rows");
  Normalization norm;
  norm.mean = packed.row(0).transpose();
  norm.stddev = packed.row(1).transpose();
  norm.max_abs = packed.row(2).transpose();
  return norm;
}

Eigen::MatrixXd Dataset::prefix(int i) const { return normalized.at(i).topRows(k); }

Eigen::MatrixXd Dataset::suffix(int i) const { return normalized.at(i).middleRows(k, l); }

Dataset build_dataset(std::vector<Trajectory> trajs, int k, int l) {
  if (trajs.empty()) throw std::invalid_argument("build_dataset: empty corpus");
  if (k < 2) throw std::invalid_argument("build_dataset: k must be >= 2");
  if (l < 1) throw std::invalid_argument("build_dataset: l must be >= 1");
  for (const Trajectory& traj : trajs) {
    traj.validate();
    if (k + l > traj.m())
      throw std::invalid_argument("build_dataset: k + l exceeds trajectory length " +
                                  std::to_string(traj.m()));
  }
  Dataset ds;
  ds.norm = Normalization::fit(trajs);
  ds.k = k;
  ds.l = l;
  for (const Trajectory& traj : trajs) ds.normalized.push_back(ds.norm.apply(traj.states));
  ds.trajs = std::move(trajs);
  return ds;
}

}  // namespace bridgeflow
