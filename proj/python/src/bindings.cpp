#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "ponly/equivalence.hpp"
#include "ponly/errors.hpp"
#include "ponly/io.hpp"
#include "ponly/likelihoods.hpp"
#include "ponly/simstudy.hpp"
#include "ponly/solvers.hpp"

namespace py = pybind11;
using namespace ponly;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Dataset make_dataset(const MatrixXd& presence, const MatrixXd& background, double area,
                     const std::optional<VectorXd>& weights) {
  if (weights) return Dataset(presence, background, area, *weights);
  return Dataset(presence, background, area);
}

Penalty make_penalty(const std::string& kind, double lam, std::optional<double> mix) {
  nlohmann::json j{{"kind", kind}, {"lambda", lam}};
  if (mix) j["mix"] = *mix;
  return penalty_from_json(j);
}

std::string fit(const MatrixXd& presence, const MatrixXd& background, double area,
                const std::string& model, std::optional<double> W, const std::string& penalty,
                double lam, std::optional<double> mix, const std::optional<VectorXd>& weights) {
  const Dataset d = make_dataset(presence, background, area, weights);
  const Penalty pen = make_penalty(penalty, lam, mix);
  ModelFit f;
  if (model == "ipp") {
    f = fit_ipp(d, pen);
  } else if (model == "maxent") {
    f = fit_maxent(d, pen);
  } else if (model == "lr") {
    f = fit_logistic(d, W.value_or(1.0), pen);
  } else if (model == "iwlr") {
    f = W ? fit_logistic(d, *W, pen) : fit_iwlr(d, pen);
  } else if (model == "berman-turner") {
    f = fit_poisson_llm(bin_presence_by_features(d), d.background(), pen);
  } else {
    throw InvalidArgument("unknown model '" + model + "'");
  }
  return to_json(f).dump();
}

std::string check(const MatrixXd& presence, const MatrixXd& background, double area,
                  const std::string& which, const std::string& penalty, double lam, std::optional<double> mix,
                  std::optional<double> tolerance, std::optional<double> W,
                  const std::optional<VectorXd>& weights) {
  const Dataset d = make_dataset(presence, background, area, weights);
  const Penalty pen = make_penalty(penalty, lam, mix);
  if (which == "prop1") return to_json(check_prop1(d, pen, {}, tolerance.value_or(kExactTolerance))).dump();
  if (which == "prop2") {
    return to_json(check_prop2(d, pen, {}, tolerance.value_or(kLimitTolerance), W)).dump();
  }
  if (which == "scores") return to_json(check_scores(fit_ipp(d, pen), d, tolerance.value_or(kExactTolerance))).dump();
  throw InvalidArgument("unknown check '" + which + "'");
}

std::string equivalence_sweep(int datasets, std::uint64_t seed) {
  SweepCheckConfig cfg;
  cfg.datasets = datasets;
  cfg.seed = seed;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : run_equivalence_sweep(cfg)) out.push_back(to_json(r));
  return out.dump();
}

std::string sweep(const std::string& config_json) {
  return emit_figure_data(run_sweep(sweep_config_from_json(nlohmann::json::parse(config_json))));
}

py::tuple lr_limit(double ratio, const std::string& variant) {
  MixtureSpec1D spec;
  spec.variant = variant_from_string(variant);
  const LrLimit l = population_lr_limit(spec, ratio);
  return py::make_tuple(l.eta, l.beta);
}

py::tuple study_data(std::size_t n1, std::size_t n0, std::uint64_t seed, const std::string& variant) {
  MixtureSpec1D spec;
  spec.variant = variant_from_string(variant);
  const Dataset d = draw_study_data(spec, n1, n0, seed);
  return py::make_tuple(MatrixXd(d.presence()), MatrixXd(d.background()));
}

py::tuple read_csv(const std::string& path, double area) {
  const Dataset d = read_dataset_csv_file(path, area);
  return py::make_tuple(MatrixXd(d.presence()), MatrixXd(d.background()), d.weights());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Presence-only intensity models: core bindings";
  m.attr("__version__") = tool_version();

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ModelInvalid>(m, "ModelInvalid", PyExc_ValueError);
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);
  py::register_exception<RankDeficiency>(m, "RankDeficiency", PyExc_RuntimeError);
  py::register_exception<InfeasiblePoint>(m, "InfeasiblePoint", PyExc_RuntimeError);

  m.def("fit", &fit, py::arg("presence"), py::arg("background"), py::arg("area"),
        py::arg("model") = "ipp", py::arg("W") = std::nullopt, py::arg("penalty") = "none",
        py::arg("lam") = 0.0, py::arg("mix") = std::nullopt, py::arg("weights") = std::nullopt);
  m.def("check", &check, py::arg("presence"), py::arg("background"), py::arg("area"),
        py::arg("which"), py::arg("penalty") = "none", py::arg("lam") = 0.0, py::arg("mix") = std::nullopt,
        py::arg("tolerance") = std::nullopt, py::arg("W") = std::nullopt,
        py::arg("weights") = std::nullopt);
  m.def("equivalence_sweep", &equivalence_sweep, py::arg("datasets") = 50,
        py::arg("seed") = SweepCheckConfig{}.seed);
  m.def("sweep", &sweep, py::arg("config_json"));
  m.def("population_lr_limit", &lr_limit, py::arg("ratio"),
        py::arg("variant") = "population_proportion");
  m.def("study_data", &study_data, py::arg("n1"), py::arg("n0"), py::arg("seed"),
        py::arg("variant") = "population_proportion");
  m.def("read_dataset_csv", &read_csv, py::arg("path"), py::arg("area"));
  m.def("mu1", [](const std::string& variant) {
    MixtureSpec1D spec;
    spec.variant = variant_from_string(variant);
    return spec.mu1();
  }, py::arg("variant") = "population_proportion");
}
