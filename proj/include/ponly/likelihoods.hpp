#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "ponly/data.hpp"

namespace ponly {

/// Log-likelihood with exact first and second derivatives. Parameter order
/// is intercept first (when the likelihood has one), then slopes.
/// Additive constants (log n1!, sum log N(A_i)!) are dropped throughout.
struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Presence counts per background grid cell.
struct BinnedCounts {
  std::vector<std::size_t> counts;            ///< N(A_i), length n0
  std::vector<std::size_t> cell_of_presence;  ///< cell index of each presence row
  double cell_area = 0.0;                     ///< |D| / n0

  std::size_t cells() const { return counts.size(); }
  std::size_t total() const;
};

/// Largest linear predictor whose exponential is evaluated. Larger values
/// raise InfeasiblePoint rather than returning inf.
inline constexpr double kMaxExponent = 700.0;

/// Numerical IPP log-likelihood:
///   sum_{y=1} (alpha + beta'x) - sum_{y=0} w_i exp(alpha + beta'x_i).
ObjectiveEval ipp_loglik(double alpha, const Eigen::VectorXd& beta,
                         const Dataset& data);

/// Intercept-free conditional (Maxent) log-likelihood:
///   sum_{y=1} beta'x - n1 log(sum_{y=0} w_i exp(beta'x_i)).
ObjectiveEval maxent_loglik(const Eigen::VectorXd& beta, const Dataset& data);

/// Logistic log-likelihood with background case weight W (W = 1 is the
/// ordinary unweighted fit):
///   sum_{y=1} (eta + beta'x) - sum_i W^{1-y_i} log(1 + exp(eta + beta'x_i)).
ObjectiveEval logistic_loglik(double eta, const Eigen::VectorXd& beta,
                              const Dataset& data, double W);

/// Poisson log-linear model on grid cell counts:
///   sum_i N_i (alpha + beta'x_i) - cell_area * sum_i exp(alpha + beta'x_i).
ObjectiveEval poisson_llm_loglik(double alpha, const Eigen::VectorXd& beta,
                                 const BinnedCounts& binned,
                                 const Eigen::MatrixXd& cell_features);

/// Assigns each presence location to its nearest cell center of a regular
/// grid background; equidistant points go to the lower cell index.
/// Throws InvalidArgument when `background` is not the grid produced by
/// sample_background(domain, n0, grid).
BinnedCounts bin_presence(const Locations& presence, const Locations& background,
                          const Domain& domain);

/// Same discretization in feature space: each presence row goes to the
/// nearest background row (Euclidean, lowest index on ties). Used when
/// locations are not available, e.g. for CSV input.
BinnedCounts bin_presence_by_features(const Dataset& data);

/// log(1 + exp(t)) without overflow.
double log1pexp(double t);

/// 1 / (1 + exp(-t)) without overflow.
double sigmoid(double t);

}  // namespace ponly
