#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "ponly/data.hpp"
#include "ponly/likelihoods.hpp"

namespace ponly {

/// Convex penalty J(beta) on the slopes; intercepts are never penalized.
///
///   l1:      lambda * sum_j r_j |beta_j|
///   l2:      lambda / 2 * sum_j r_j beta_j^2
///   elastic: lambda * sum_j r_j (mix |beta_j| + (1 - mix) / 2 beta_j^2)
///
/// Fitting routines apply the penalty to coefficients of background-
/// standardized features, so r_j refers to that scale.
struct Penalty {
  enum class Kind { none, l1, l2, elastic };

  Kind kind = Kind::none;
  double lambda = 0.0;
  Eigen::VectorXd weights;  ///< r_j; empty means all ones
  double mix = 1.0;

  static Penalty none() { return {}; }
  static Penalty l1(double lambda) { return {Kind::l1, lambda, {}, 1.0}; }
  static Penalty l2(double lambda) { return {Kind::l2, lambda, {}, 0.0}; }
  static Penalty elastic(double lambda, double mix) {
    return {Kind::elastic, lambda, {}, mix};
  }

  void validate(Eigen::Index p) const;
  double l1_strength(Eigen::Index j) const;
  double l2_strength(Eigen::Index j) const;
  bool has_l1() const;
  double value(const Eigen::VectorXd& beta) const;
  std::string describe() const;
};

const char* to_string(Penalty::Kind kind);
Penalty::Kind penalty_kind_from_string(const std::string& name);

struct OptimOptions {
  double grad_tol = 1e-10;  ///< optimality residual, sup-norm divided by n1
  int max_iter = 200;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  double divergence_bound = 1e3;  ///< |beta| on the standardized scale
  double W_initial = 1e4;
  double W_target_maxfit = 1e-3;
  double W_target_slack = 1.5;  ///< accept max yhat up to slack * target
  double W_growth = 100.0;
  double W_change_tol = 1e-8;
  int W_max_escalations = 5;
  int W_max_stability_refits = 8;

  void validate() const;
};

/// Smooth concave objective for the Newton engine. The first
/// `unpenalized` coordinates are exempt from the penalty, which acts on the
/// remaining ones in order.
struct SmoothObjective {
  std::function<ObjectiveEval(const Eigen::VectorXd&)> evaluate;
  Eigen::Index unpenalized = 0;
  double scale = 1.0;  ///< residual normalization
};

struct NewtonResult {
  Eigen::VectorXd params;
  ObjectiveEval at_optimum;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

/// Maximizes evaluate(x) - J(x). Damped Newton with backtracking; with an
/// l1 term, proximal Newton whose quadratic subproblem is solved by cyclic
/// coordinate descent with soft thresholding. Optimality is the sup norm of
/// the minimum-norm subgradient divided by `scale`.
NewtonResult newton_solve(const SmoothObjective& objective, Eigen::VectorXd start,
                          const Penalty& penalty, const OptimOptions& opts);

enum class ModelKind { ipp, maxent, logistic, iwlr, poisson_llm };

const char* to_string(ModelKind kind);

struct ModelFit {
  ModelKind model = ModelKind::ipp;
  std::optional<double> alpha;  ///< log-intensity intercept (implied for logistic fits)
  std::optional<double> eta;    ///< logistic intercept
  Eigen::VectorXd beta;
  std::optional<double> W;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  /// Fitted intensity per row for ipp/maxent (per cell for poisson_llm),
  /// fitted probability per row for logistic fits.
  Eigen::VectorXd fitted;
  /// Observed information (negated Hessian of the unpenalized likelihood)
  /// at the estimate, original feature scale, intercept first.
  Eigen::MatrixXd information;
  Penalty penalty;
  Eigen::Index n1 = 0;
  Eigen::Index n0 = 0;
  double domain_area = 0.0;
  std::optional<std::uint64_t> seed;

  // W escalation record (iwlr only)
  int escalation_rounds = 0;
  int stability_refits = 0;
  double max_fitted = 0.0;
  double last_W_change = 0.0;
};

/// Background moments used to standardize features before fitting.
struct Standardization {
  Eigen::VectorXd center;
  Eigen::VectorXd scale;

  /// Weighted (quadrature) mean and standard deviation of the background
  /// rows. A constant feature raises RankDeficiency.
  static Standardization from_background(const Eigen::MatrixXd& background,
                                         const Eigen::VectorXd& weights);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Dataset apply(const Dataset& data) const;
  Eigen::VectorXd slopes_to_original(const Eigen::VectorXd& beta_std) const;
  double intercept_to_original(double intercept_std,
                               const Eigen::VectorXd& beta_std) const;
  Eigen::VectorXd slopes_to_standard(const Eigen::VectorXd& beta) const;
  double intercept_to_standard(double intercept, const Eigen::VectorXd& beta) const;
};

ModelFit fit_ipp(const Dataset& data, const Penalty& penalty = {},
                 const OptimOptions& opts = {});

/// Maximizes the conditional likelihood, then sets
/// alpha = log n1 - log sum_{y=0} w_i exp(beta'x_i) so Lambda(D) = n1.
ModelFit fit_maxent(const Dataset& data, const Penalty& penalty = {},
                    const OptimOptions& opts = {});

/// Weighted logistic regression; W = 1 is the unweighted fit. Reports the
/// implied alpha = eta + log(W n0 / |D|).
ModelFit fit_logistic(const Dataset& data, double W, const Penalty& penalty = {},
                      const OptimOptions& opts = {});

/// Infinitely weighted logistic regression. Starts at W_initial, rescales
/// W <- (max_i yhat_i / W_target_maxfit) W until max_i yhat_i <= target,
/// then multiplies W by W_growth until successive slope estimates change by
/// at most W_change_tol.
ModelFit fit_iwlr(const Dataset& data, const Penalty& penalty = {},
                  const OptimOptions& opts = {});

/// Poisson log-linear fit to presence counts on background cells.
ModelFit fit_poisson_llm(const BinnedCounts& binned,
                         const Eigen::MatrixXd& cell_features,
                         const Penalty& penalty = {}, const OptimOptions& opts = {});

}  // namespace ponly
