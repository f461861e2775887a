#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ponly {

/// Bad caller input: empty samples, inconsistent dimensions, bad options.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An intensity or thinning model that cannot be simulated as given.
class ModelInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objective evaluated where exp(linear predictor) would overflow.
class InfeasiblePoint : public std::runtime_error {
 public:
  InfeasiblePoint(std::size_t row, double linear_predictor);

  std::size_t row() const { return row_; }
  double linear_predictor() const { return eta_; }

 private:
  std::size_t row_;
  double eta_;
};

/// Hessian singular at the optimum (collinear or constant features).
class RankDeficiency : public std::runtime_error {
 public:
  RankDeficiency(const std::string& what, Eigen::VectorXd null_direction)
      : std::runtime_error(what), direction_(std::move(null_direction)) {}

  const Eigen::VectorXd& direction() const { return direction_; }

 private:
  Eigen::VectorXd direction_;
};

/// Optimizer failed: iteration cap, stalled line search, divergence under
/// separation, or runaway W escalation. Carries the last iterate.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, Eigen::VectorXd last_iterate,
                 int iterations, double grad_norm,
                 Eigen::VectorXd direction = {})
      : std::runtime_error(what),
        last_(std::move(last_iterate)),
        direction_(std::move(direction)),
        iterations_(iterations),
        grad_norm_(grad_norm) {}

  const Eigen::VectorXd& last_iterate() const { return last_; }
  /// Direction of unbounded ascent when divergence was detected; empty otherwise.
  const Eigen::VectorXd& direction() const { return direction_; }
  int iterations() const { return iterations_; }
  double grad_norm() const { return grad_norm_; }

 private:
  Eigen::VectorXd last_;
  Eigen::VectorXd direction_;
  int iterations_;
  double grad_norm_;
};

}  // namespace ponly
