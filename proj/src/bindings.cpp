#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rgrst/error.hpp"
#include "rgrst/estimate.hpp"
#include "rgrst/gof.hpp"
#include "rgrst/model.hpp"
#include "rgrst/parallel.hpp"
#include "rgrst/simulate.hpp"

namespace py = pybind11;
using namespace rgrst;

namespace {

FitData plain_data(const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
  FitData d;
  d.y = y;
  d.t = t;
  d.Xc = Eigen::MatrixXd(y.size(), 0);
  d.Xl = Eigen::MatrixXd(y.size(), 0);
  return d;
}

}  // namespace

PYBIND11_MODULE(_rgrst, m) {
  m.doc() = "RGRST model of hospital charge and length of stay";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<OptimizationError>(m, "OptimizationError", base.ptr());
  py::register_exception<ConditioningError>(m, "ConditioningError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());

  py::class_<CoxianParams>(m, "CoxianParams")
      .def(py::init<int, Eigen::VectorXd>(), py::arg("d"), py::arg("s"))
      .def_readwrite("d", &CoxianParams::d)
      .def_readwrite("s", &CoxianParams::s);

  py::class_<RgrstParams>(m, "RgrstParams")
      .def(py::init<>())
      .def_static("single", &RgrstParams::single, py::arg("mu"), py::arg("sigma"), py::arg("s"), py::arg("a") = 1.0,
                  py::arg("gamma") = 1.0)
      .def_readwrite("theta", &RgrstParams::theta)
      .def_readwrite("coxians", &RgrstParams::coxians)
      .def_readwrite("a", &RgrstParams::a)
      .def_readwrite("gamma", &RgrstParams::gamma)
      .def_property(
          "mu", [](const RgrstParams& p) { std::vector<double> v; for (auto& l : p.lognormals) v.push_back(l.mu); return v; },
          [](RgrstParams& p, const std::vector<double>& v) {
            p.lognormals.resize(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) p.lognormals[i].mu = v[i];
          })
      .def_property(
          "sigma",
          [](const RgrstParams& p) { std::vector<double> v; for (auto& l : p.lognormals) v.push_back(l.sigma); return v; },
          [](RgrstParams& p, const std::vector<double>& v) {
            p.lognormals.resize(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) p.lognormals[i].sigma = v[i];
          })
      .def("validate", &RgrstParams::validate);

  py::class_<RgrstModel>(m, "RgrstModel")
      .def(py::init<RgrstParams>())
      .def("joint_density", py::vectorize(&RgrstModel::joint_density))
      .def("log_joint_density", py::vectorize(&RgrstModel::log_joint_density))
      .def("q1", py::vectorize(&RgrstModel::q1_tilde))
      .def("time_dependent_density", py::vectorize(&RgrstModel::time_dependent_density))
      .def("marginal_los", py::vectorize(&RgrstModel::marginal_los))
      .def("marginal_charge", py::vectorize(&RgrstModel::marginal_charge))
      .def("total_mass", &RgrstModel::total_mass)
      .def("conditional_mean_log_charge", &RgrstModel::conditional_mean_log_charge, py::arg("t"),
           py::arg("min_mass") = 1e-12)
      .def("conditional_mean_log_los", &RgrstModel::conditional_mean_log_los, py::arg("y"), py::arg("min_mass") = 1e-12);

  m.def(
      "simulate",
      [](const RgrstParams& p, std::size_t n, std::uint64_t seed, double t_max) {
        SimConfig cfg;
        cfg.n_paths = n;
        cfg.seed = seed;
        cfg.params = p;
        cfg.t_max = t_max;
        std::vector<SimRecord> recs;
        {
          py::gil_scoped_release release;
          recs = simulate_cohort(cfg);
        }
        Eigen::VectorXd y0(n), omega(n), T(n), Y(n);
        std::vector<bool> censored(n);
        for (std::size_t i = 0; i < n; ++i) {
          y0[i] = recs[i].y0;
          omega[i] = recs[i].omega;
          T[i] = recs[i].T;
          Y[i] = recs[i].Y_T;
          censored[i] = recs[i].censored;
        }
        py::dict out;
        out["y0"] = y0;
        out["omega"] = omega;
        out["T"] = T;
        out["Y_T"] = Y;
        out["censored"] = censored;
        return out;
      },
      py::arg("params"), py::arg("n"), py::arg("seed") = 1, py::arg("t_max") = 365.0,
      "Simulate n paths; returns arrays y0, omega, T, Y_T and censored flags.");

  m.def(
      "log_likelihood",
      [](const RgrstParams& p, const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
        RegressionModel rm;
        rm.base = p;
        return log_likelihood(rm, plain_data(y, t));
      },
      py::arg("params"), py::arg("y"), py::arg("t"));

  m.def(
      "fit",
      [](const Eigen::VectorXd& y, const Eigen::VectorXd& t, const std::string& dims, int starts, std::uint64_t seed) {
        FitConfig cfg;
        cfg.n_starts = starts;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return report_to_json(fit(plain_data(y, t), ModelDims::parse(dims), cfg));
      },
      py::arg("y"), py::arg("t"), py::arg("dims") = "1:1", py::arg("starts") = 16, py::arg("seed") = 1,
      "Fit without covariates; returns the JSON report.");

  m.def(
      "chi_square",
      [](const RgrstParams& p, const Eigen::VectorXd& y, const Eigen::VectorXd& t) {
        RegressionModel rm;
        rm.base = p;
        const auto d = plain_data(y, t);
        GofResults g;
        {
          py::gil_scoped_release release;
          g = evaluate_fit(d.y, d.t, d.Xc, d.Xl, rm);
        }
        auto one = [](const ChiSquareResult& r) {
          py::dict o;
          o["statistic"] = r.statistic_standard;
          o["normalized"] = r.statistic_normalized;
          o["dof"] = r.dof;
          o["p_value"] = r.p_value;
          return o;
        };
        py::dict out;
        out["charge"] = one(g.charge);
        out["los"] = one(g.los);
        out["joint"] = one(g.joint);
        return out;
      },
      py::arg("params"), py::arg("y"), py::arg("t"), "Pearson tests of (y, t) against the model on the default partitions.");

  m.def(
      "kde",
      [](const std::vector<double>& samples, double bandwidth, const std::vector<double>& grid) {
        return kde_gaussian(samples, bandwidth, grid);
      },
      py::arg("samples"), py::arg("bandwidth"), py::arg("grid"));

  m.def("set_max_threads", &set_max_threads);
}
