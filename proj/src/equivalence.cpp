#include "ponly/equivalence.hpp"

#include <algorithm>
#include <cmath>

#include "ponly/errors.hpp"
#include "ponly/rng.hpp"

namespace ponly {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

EquivalenceReport make_report(std::string name, double diff, double tol,
                              const Penalty& penalty) {
  EquivalenceReport r;
  r.check = std::move(name);
  r.max_abs_diff = diff;
  r.tolerance = tol;
  r.pass = diff <= tol;
  r.penalty = penalty.describe();
  return r;
}

}  // namespace

EquivalenceReport check_prop1(const Dataset& data, const Penalty& penalty,
                              const OptimOptions& opts, double tolerance) {
  const ModelFit ipp = fit_ipp(data, penalty, opts);
  const ModelFit maxent = fit_maxent(data, penalty, opts);
  const double beta_gap = (ipp.beta - maxent.beta).cwiseAbs().maxCoeff();
  auto r = make_report("prop1_maxent_vs_ipp", beta_gap, tolerance, penalty);
  r.details = {{"beta_gap", beta_gap},
               {"alpha_gap", std::abs(*ipp.alpha - *maxent.alpha)}};
  return r;
}

EquivalenceReport check_prop2(const Dataset& data, const Penalty& penalty,
                              const OptimOptions& opts, double tolerance,
                              std::optional<double> forced_W) {
  const ModelFit ipp = fit_ipp(data, penalty, opts);
  const ModelFit wlr = forced_W ? fit_logistic(data, *forced_W, penalty, opts)
                                : fit_iwlr(data, penalty, opts);
  const double beta_gap = (ipp.beta - wlr.beta).cwiseAbs().maxCoeff();
  const double alpha_gap = std::abs(*ipp.alpha - *wlr.alpha);
  auto r = make_report("prop2_iwlr_vs_ipp", std::max(beta_gap, alpha_gap), tolerance,
                       penalty);
  r.details = {{"beta_gap", beta_gap},
               {"alpha_gap", alpha_gap},
               {"W", *wlr.W},
               {"max_fitted", wlr.max_fitted},
               {"escalation_rounds", static_cast<double>(wlr.escalation_rounds)},
               {"stability_refits", static_cast<double>(wlr.stability_refits)}};
  return r;
}

EquivalenceReport check_scores(const ModelFit& fit, const Dataset& data,
                               double tolerance) {
  if (fit.model != ModelKind::ipp && fit.model != ModelKind::maxent) {
    throw InvalidArgument("check_scores: needs an ipp or maxent fit");
  }
  if (!fit.alpha || fit.beta.size() != data.p()) {
    throw InvalidArgument("check_scores: fit does not match the dataset");
  }
  const double n1 = static_cast<double>(data.n1());
  const auto bg = data.background();
  const VectorXd mass =
      data.weights().array() * ((bg * fit.beta).array() + *fit.alpha).exp();
  const double normalization = std::abs(mass.sum() - n1) / n1;

  // Moment condition on the standardized scale, per presence point.
  const auto stdz = Standardization::from_background(bg, data.weights());
  const VectorXd q = mass / mass.sum();
  const VectorXd bg_mean = bg.transpose() * q;
  const VectorXd pres_mean = data.presence().colwise().mean().transpose();
  const VectorXd score = (pres_mean - bg_mean).cwiseQuotient(stdz.scale);
  const double moment_gap = score.cwiseAbs().maxCoeff();

  // Penalized KKT residual: n1 * score_j - d/dbeta_j J in the subdifferential.
  const VectorXd beta_std = stdz.slopes_to_standard(fit.beta);
  double kkt = 0.0;
  for (Index j = 0; j < score.size(); ++j) {
    const double g = -n1 * score(j) + fit.penalty.l2_strength(j) * beta_std(j);
    const double l1 = fit.penalty.l1_strength(j);
    double r;
    if (l1 == 0.0) {
      r = std::abs(g);
    } else if (beta_std(j) != 0.0) {
      r = std::abs(g + std::copysign(l1, beta_std(j)));
    } else {
      r = std::max(0.0, std::abs(g) - l1);
    }
    kkt = std::max(kkt, r / n1);
  }

  auto r = make_report("score_equations", std::max(normalization, kkt), tolerance,
                       fit.penalty);
  r.details = {{"normalization", normalization},
               {"moment_kkt", kkt},
               {"moment_gap", moment_gap}};
  return r;
}

EquivalenceReport check_eta_relation(const ModelFit& lr_fit, const Dataset& data,
                                     const IntensityModel& truth,
                                     double total_intensity,
                                     std::optional<double> tolerance) {
  if (truth.kind() != IntensityModel::Kind::log_linear) {
    throw InvalidArgument(
        "check_eta_relation: the intercept relation only holds for a "
        "log-linear truth");
  }
  if (lr_fit.model != ModelKind::logistic && lr_fit.model != ModelKind::iwlr) {
    throw InvalidArgument("check_eta_relation: needs a logistic fit");
  }
  if (!(total_intensity > 0.0)) {
    throw InvalidArgument("check_eta_relation: Lambda(D) must be positive");
  }
  const auto& c = truth.components().front();
  const double alpha = c.log_weight + c.alpha;
  const double n1 = static_cast<double>(data.n1());
  const double n0 = static_cast<double>(data.n0());
  const double area = data.domain_area();
  const double W = lr_fit.W.value_or(1.0);

  // Intercept standard error from the observed information; the implied
  // alpha differs from eta by a constant, so they share it.
  const MatrixXd cov = lr_fit.information.inverse();
  const double se = std::sqrt(cov(0, 0));

  double diff;
  std::string name;
  if (W == 1.0) {
    diff = *lr_fit.eta - (alpha + std::log(n1 * area / (n0 * total_intensity)));
    name = "eta_relation";
  } else {
    diff = *lr_fit.alpha - (alpha + std::log(n1 / total_intensity));
    name = "eta_relation_weighted";
  }
  auto r = make_report(name, std::abs(diff), tolerance.value_or(3.0 * se), lr_fit.penalty);
  r.details = {{"signed_diff", diff}, {"intercept_se", se}, {"W", W}};
  return r;
}

Dataset random_sweep_dataset(std::uint64_t seed) {
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    Rng rng = Rng::stream(seed, attempt);
    const auto p = static_cast<Index>(1 + rng.below(5));
    const auto n1 = static_cast<Index>(5 + rng.below(196));
    const auto n0 = static_cast<Index>(
        std::floor(std::exp(rng.uniform(std::log(10.0), std::log(2001.0)))));
    const double area = std::exp(rng.uniform(std::log(0.5), std::log(5.0)));

    VectorXd shift(p), spread(p);
    for (Index j = 0; j < p; ++j) {
      shift(j) = rng.uniform(-0.8, 0.8);
      spread(j) = rng.uniform(0.5, 3.0);
    }
    MatrixXd bg(n0, p), pres(n1, p);
    for (Index i = 0; i < n0; ++i) {
      for (Index j = 0; j < p; ++j) bg(i, j) = spread(j) * rng.normal();
    }
    for (Index i = 0; i < n1; ++i) {
      for (Index j = 0; j < p; ++j) pres(i, j) = spread(j) * rng.normal(shift(j), 1.0);
    }
    Dataset data(std::move(pres), std::move(bg), area);
    try {
      fit_ipp(data);
      return data;
    } catch (const NonConvergence&) {
    } catch (const RankDeficiency&) {
    }
  }
  throw InvalidArgument("random_sweep_dataset: no admissible draw");
}

std::vector<EquivalenceReport> run_equivalence_sweep(const SweepCheckConfig& config,
                                                     const OptimOptions& opts) {
  std::vector<EquivalenceReport> out;
  for (int i = 0; i < config.datasets; ++i) {
    const std::uint64_t ds_seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    const Dataset data = random_sweep_dataset(ds_seed);
    for (const auto& pen : config.penalties) {
      auto r1 = check_prop1(data, pen, opts, config.prop1_tolerance);
      r1.dataset_seed = ds_seed;
      out.push_back(std::move(r1));
      auto r2 = check_prop2(data, pen, opts, config.prop2_tolerance);
      r2.dataset_seed = ds_seed;
      out.push_back(std::move(r2));
    }
  }
  return out;
}

}  // namespace ponly
