#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "ponly/data.hpp"
#include "ponly/rng.hpp"

namespace oracle {

using Fn = std::function<double(const Eigen::VectorXd&)>;
using GradFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::VectorXd fd_gradient(const Fn& f, const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_hessian(const GradFn& grad, const Eigen::VectorXd& x, double h = 1e-5) {
  Eigen::MatrixXd H(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    H.col(i) = (grad(a) - grad(b)) / (2.0 * h);
  }
  return H;
}

/// max |a - b| / max(1, max |b|)
inline double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

/// Maximizer of a unimodal f on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Presence rows shifted from standard-normal background rows.
inline ponly::Dataset random_dataset(std::uint64_t seed, Eigen::Index n1, Eigen::Index n0,
                                     Eigen::Index p, double area = 1.0, double shift = 0.4) {
  ponly::Rng rng(seed);
  Eigen::MatrixXd pres(n1, p), bg(n0, p);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < p; ++j) pres(i, j) = rng.normal(shift, 1.0);
  for (Eigen::Index i = 0; i < n0; ++i)
    for (Eigen::Index j = 0; j < p; ++j) bg(i, j) = rng.normal();
  return ponly::Dataset(pres, bg, area);
}

inline Eigen::VectorXd random_vector(ponly::Rng& rng, Eigen::Index n, double scale) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

}  // namespace oracle
