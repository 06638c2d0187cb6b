// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the core operations: Gaussian path schedules, the
// linear codec, metrics, the numerical verification checks, and the CLI
// entry point (which covers the full pipeline).
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bridgeflow/analysis.hpp"
#include "bridgeflow/cli.hpp"
#include "bridgeflow/codec.hpp"
#include "bridgeflow/config.hpp"
#include "bridgeflow/dynamics.hpp"
#include "bridgeflow/metrics.hpp"
#include "bridgeflow/model.hpp"
#include "bridgeflow/path.hpp"
#include "bridgeflow/rng.hpp"
#include "bridgeflow/sampler.hpp"
#include "bridgeflow/trainer.hpp"
#include "bridgeflow/version.hpp"

namespace py = pybind11;
using namespace bridgeflow;

namespace {

py::dict metric_dict(const MetricSet& m) {
  py::dict d;
  d["mse"] = m.mse;
  d["rfne"] = m.rfne;
  d["psnr"] = m.psnr;
  d["ssim"] = m.ssim;
  d["pearson"] = m.pearson;
  return d;
}

py::dict checkpoint_dict(const MomentCheckpoint& cp) {
  py::dict d;
  d["t"] = cp.t;
  d["mean"] = cp.mean;
  d["mean_expected"] = cp.mean_expected;
  d["mean_se"] = cp.mean_se;
  d["var"] = cp.var;
  d["var_expected"] = cp.var_expected;
  d["var_se"] = cp.var_se;
  d["mt_var"] = cp.mt_var;
  d["mt_var_expected"] = cp.mt_var_expected;
  d["mt_var_se"] = cp.mt_var_se;
  return d;
}

py::dict sde_report_dict(const SdeMomentReport& r) {
  py::dict d;
  py::list cps;
  for (const MomentCheckpoint& cp : r.checkpoints) cps.append(checkpoint_dict(cp));
  d["checkpoints"] = cps;
  py::list limits;
  for (const MomentCheckpoint& cp : r.limit_points) limits.append(checkpoint_dict(cp));
  d["limit_points"] = limits;
  d["has_limit"] = r.has_limit;
  d["limit_estimate"] = r.limit_estimate;
  d["limit_expected"] = r.limit_expected;
  d["paths"] = r.paths;
  d["dt"] = r.dt;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Gaussian probability-path flow matching core";
  m.attr("__version__") = kVersion;

  py::register_exception<SingularScheduleError>(m, "SingularScheduleError");

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", &Rng::normal)
      .def("normal_vector", &Rng::normal_vector, py::arg("n"));

  py::class_<ScheduleValues>(m, "ScheduleValues")
      .def_readonly("a", &ScheduleValues::a)
      .def_readonly("b", &ScheduleValues::b)
      .def_readonly("c", &ScheduleValues::c)
      .def_readonly("da", &ScheduleValues::da)
      .def_readonly("db", &ScheduleValues::db)
      .def_readonly("dc", &ScheduleValues::dc);

  py::class_<PathSchedule>(m, "PathSchedule")
      .def_static(
          "make",
          [](const std::string& kind, const std::map<std::string, double>& params) {
            return PathSchedule::make(PathSchedule::kind_from_name(kind), params);
          },
          py::arg("kind"), py::arg("params"))
      .def_property_readonly("kind", [](const PathSchedule& s) { return s.name(); })
      .def_property_readonly("t_lo", &PathSchedule::t_lo)
      .def_property_readonly("t_hi", &PathSchedule::t_hi)
      .def("at", &PathSchedule::at, py::arg("t"))
      .def(
          "moments",
          [](const PathSchedule& s, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
             double t) {
            const PathMoments mm = path_moments(s, ConditionPair(z0, z1), t);
            return py::make_tuple(mm.mean, mm.stddev);
          },
          py::arg("z0"), py::arg("z1"), py::arg("t"))
      .def(
          "sample",
          [](const PathSchedule& s, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
             double t, Rng& rng) {
            const PathPoint pt = sample_point(s, ConditionPair(z0, z1), t, rng);
            return py::make_tuple(pt.z, pt.xi);
          },
          py::arg("z0"), py::arg("z1"), py::arg("t"), py::arg("rng"))
      .def(
          "conditional_vf",
          [](const PathSchedule& s, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
             double t, const Eigen::VectorXd& z) {
            return conditional_vf(s, ConditionPair(z0, z1), t, z);
          },
          py::arg("z0"), py::arg("z1"), py::arg("t"), py::arg("z"));

  py::class_<LinearCodec>(m, "LinearCodec")
      .def_static("fit", &LinearCodec::fit, py::arg("rows"), py::arg("p"))
      .def_static("load", &LinearCodec::load, py::arg("dir"))
      .def("save", &LinearCodec::save, py::arg("dir"))
      .def_property_readonly("data_dim", &LinearCodec::data_dim)
      .def_property_readonly("latent_dim", &LinearCodec::latent_dim)
      .def("encode", &LinearCodec::encode, py::arg("x"))
      .def("decode", &LinearCodec::decode, py::arg("y"))
      .def("encode_rows", &LinearCodec::encode_rows, py::arg("rows"))
      .def("decode_rows", &LinearCodec::decode_rows, py::arg("rows"))
      .def("reconstruction_mse", &LinearCodec::reconstruction_mse, py::arg("rows"));

  m.def(
      "compute_metrics",
      [](const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double data_range) {
        return metric_dict(compute_metrics(pred, truth, data_range));
      },
      py::arg("pred"), py::arg("truth"), py::arg("data_range") = 2.0);

  m.def(
      "flow_map_error",
      [](const PathSchedule& s, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
         const Eigen::VectorXd& xi, double t0, double t1, int steps) {
        return flow_map_error(s, ConditionPair(z0, z1), xi, t0, t1, steps);
      },
      py::arg("schedule"), py::arg("z0"), py::arg("z1"), py::arg("xi"), py::arg("t0") = 0.0,
      py::arg("t1") = 1.0, py::arg("steps") = 1000);

  m.def(
      "continuity_residual",
      [](const PathSchedule& s, double z0, double z1, int nz, int nt, double t_lo,
         double t_hi) {
        ContinuityGrid grid = default_continuity_grid(s.kind());
        if (nz > 0) grid.nz = nz;
        if (nt > 0) grid.nt = nt;
        if (t_lo >= 0.0) grid.t_lo = t_lo;
        if (t_hi >= 0.0) grid.t_hi = t_hi;
        return continuity_residual(s, z0, z1, grid);
      },
      py::arg("schedule"), py::arg("z0") = -0.2, py::arg("z1") = 0.9, py::arg("nz") = 0,
      py::arg("nt") = 0, py::arg("t_lo") = -1.0, py::arg("t_hi") = -1.0);

  m.def(
      "sde_moment_check",
      [](double sigma_min, double sigma, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
         const std::vector<double>& checkpoints, std::size_t paths, double dt,
         std::uint64_t seed, const std::vector<double>& limit_ts) {
        return sde_report_dict(
            sde_moment_check(sigma_min, sigma, z0, z1, checkpoints, paths, dt, seed, limit_ts));
      },
      py::arg("sigma_min"), py::arg("sigma"), py::arg("z0"), py::arg("z1"),
      py::arg("checkpoints"), py::arg("paths") = 10000, py::arg("dt") = 1e-4,
      py::arg("seed") = 0, py::arg("limit_ts") = std::vector<double>{});

  m.def(
      "alt_sde_check",
      [](double sigma_min, double sigma, const Eigen::VectorXd& z0, const Eigen::VectorXd& z1,
         const std::vector<double>& checkpoints, std::size_t paths, double dt,
         std::uint64_t seed) {
        return sde_report_dict(
            alt_sde_check(sigma_min, sigma, z0, z1, checkpoints, paths, dt, seed));
      },
      py::arg("sigma_min"), py::arg("sigma"), py::arg("z0"), py::arg("z1"),
      py::arg("checkpoints"), py::arg("paths") = 10000, py::arg("dt") = 1e-4,
      py::arg("seed") = 0);

  m.def(
      "vf_variance_compare",
      [](double rho, double marginal_var, double sigma_min, double sigma,
         const std::vector<double>& ts, int dim, std::size_t samples, std::uint64_t seed) {
        const VarianceReport r =
            vf_variance_compare(rho, marginal_var, sigma_min, sigma, ts, dim, samples, seed);
        py::dict d;
        py::list points;
        for (const VariancePoint& p : r.points) {
          py::dict pd;
          pd["t"] = p.t;
          pd["var_u"] = p.var_u;
          pd["var_u_se"] = p.var_u_se;
          pd["var_u_closed"] = p.var_u_closed;
          pd["var_ot"] = p.var_ot;
          pd["var_ot_se"] = p.var_ot_se;
          pd["var_ot_closed"] = p.var_ot_closed;
          pd["verdict"] = p.verdict;
          points.append(pd);
        }
        d["points"] = points;
        d["cond_lhs"] = r.cond_lhs;
        d["cond_rhs"] = r.cond_rhs;
        d["condition_holds"] = r.condition_holds;
        return d;
      },
      py::arg("rho"), py::arg("marginal_var"), py::arg("sigma_min"), py::arg("sigma"),
      py::arg("ts"), py::arg("dim") = 4, py::arg("samples") = 10000, py::arg("seed") = 0);

  m.def("run_cli", &run_cli, py::arg("args"),
        "Run the command-line pipeline (gen-data | fit-codec | train | forecast | sweep | "
        "verify | metrics); returns the process exit code.");
}
