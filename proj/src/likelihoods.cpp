#include "ponly/likelihoods.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ponly/errors.hpp"

namespace ponly {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMatRef = Eigen::Ref<const MatrixXd>;

// sum_i d_i [1; x_i][1; x_i]'
MatrixXd augmented_gram(const ConstMatRef& X, const VectorXd& d) {
  const Index p = X.cols();
  MatrixXd out(p + 1, p + 1);
  out(0, 0) = d.sum();
  const VectorXd first = X.transpose() * d;
  out.block(1, 0, p, 1) = first;
  out.block(0, 1, 1, p) = first.transpose();
  const MatrixXd weighted = X.array().colwise() * d.array();
  out.bottomRightCorner(p, p) = weighted.transpose() * X;
  return 0.5 * (out + out.transpose());
}

// sum_i r_i [1; x_i]
VectorXd augmented_sum(const ConstMatRef& X, const VectorXd& r) {
  VectorXd out(X.cols() + 1);
  out(0) = r.sum();
  out.tail(X.cols()) = X.transpose() * r;
  return out;
}

void check_beta(const VectorXd& beta, Index p) {
  if (beta.size() != p) {
    throw InvalidArgument("beta has length " + std::to_string(beta.size()) +
                          ", expected " + std::to_string(p));
  }
}

// exp(u) with the overflow guard; `row_offset` maps to dataset row indices.
VectorXd guarded_exp(const VectorXd& u, Index row_offset) {
  Index worst = 0;
  const double top = u.size() > 0 ? u.maxCoeff(&worst) : 0.0;
  if (!(top <= kMaxExponent)) {
    throw InfeasiblePoint(static_cast<std::size_t>(row_offset + worst), top);
  }
  return u.array().exp().matrix();
}

}  // namespace

double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

std::size_t BinnedCounts::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

ObjectiveEval ipp_loglik(double alpha, const VectorXd& beta, const Dataset& data) {
  check_beta(beta, data.p());
  const auto pres = data.presence();
  const auto bg = data.background();
  const VectorXd u = (bg * beta).array() + alpha;
  const VectorXd mu = data.weights().cwiseProduct(guarded_exp(u, data.n1()));
  const double n1 = static_cast<double>(data.n1());

  ObjectiveEval ev;
  const VectorXd pres_sum = pres.colwise().sum().transpose();
  ev.value = n1 * alpha + beta.dot(pres_sum) - mu.sum();
  ev.gradient.resize(data.p() + 1);
  ev.gradient(0) = n1;
  ev.gradient.tail(data.p()) = pres_sum;
  ev.gradient -= augmented_sum(bg, mu);
  ev.hessian = -augmented_gram(bg, mu);
  return ev;
}

ObjectiveEval maxent_loglik(const VectorXd& beta, const Dataset& data) {
  check_beta(beta, data.p());
  const auto pres = data.presence();
  const auto bg = data.background();
  const VectorXd u = bg * beta;
  const double top = u.maxCoeff();
  VectorXd q = data.weights().array() * (u.array() - top).exp();
  const double mass = q.sum();
  q /= mass;
  const double log_norm = top + std::log(mass);
  const double n1 = static_cast<double>(data.n1());

  const VectorXd mean = bg.transpose() * q;
  const MatrixXd centered = bg.rowwise() - mean.transpose();
  MatrixXd cov = (centered.array().colwise() * q.array()).matrix().transpose() * centered;
  cov = 0.5 * (cov + cov.transpose());

  ObjectiveEval ev;
  const VectorXd pres_sum = pres.colwise().sum().transpose();
  ev.value = beta.dot(pres_sum) - n1 * log_norm;
  ev.gradient = pres_sum - n1 * mean;
  ev.hessian = -n1 * cov;
  return ev;
}

ObjectiveEval logistic_loglik(double eta, const VectorXd& beta, const Dataset& data,
                              double W) {
  check_beta(beta, data.p());
  if (!(W >= 1.0) || !std::isfinite(W)) {
    throw InvalidArgument("logistic_loglik: W must be finite and >= 1");
  }
  if (!std::isfinite(eta) || !beta.allFinite()) {
    throw InvalidArgument("logistic_loglik: non-finite parameters");
  }
  const auto pres = data.presence();
  const auto bg = data.background();
  const VectorXd t1 = (pres * beta).array() + eta;
  const VectorXd t0 = (bg * beta).array() + eta;

  ObjectiveEval ev;
  double value = t1.sum();
  // presence: residual 1 - sigma(t) = sigma(-t); curvature sigma(1 - sigma)
  VectorXd r1(t1.size()), c1(t1.size());
  for (Index i = 0; i < t1.size(); ++i) {
    value -= log1pexp(t1(i));
    const double s = sigmoid(t1(i));
    r1(i) = sigmoid(-t1(i));
    c1(i) = s * r1(i);
  }
  VectorXd r0(t0.size()), c0(t0.size());
  double bg_value = 0.0;
  for (Index i = 0; i < t0.size(); ++i) {
    bg_value += log1pexp(t0(i));
    const double s = sigmoid(t0(i));
    r0(i) = W * s;
    c0(i) = W * s * sigmoid(-t0(i));
  }
  ev.value = value - W * bg_value;
  ev.gradient = augmented_sum(pres, r1) - augmented_sum(bg, r0);
  ev.hessian = -(augmented_gram(pres, c1) + augmented_gram(bg, c0));
  return ev;
}

ObjectiveEval poisson_llm_loglik(double alpha, const VectorXd& beta,
                                 const BinnedCounts& binned,
                                 const MatrixXd& cell_features) {
  check_beta(beta, cell_features.cols());
  if (static_cast<Index>(binned.cells()) != cell_features.rows()) {
    throw InvalidArgument("poisson_llm_loglik: counts and cells differ in length");
  }
  VectorXd counts(cell_features.rows());
  for (Index i = 0; i < counts.size(); ++i) {
    counts(i) = static_cast<double>(binned.counts[static_cast<std::size_t>(i)]);
  }
  const VectorXd u = (cell_features * beta).array() + alpha;
  const VectorXd mu = binned.cell_area * guarded_exp(u, 0).array();

  ObjectiveEval ev;
  ev.value = counts.dot(u) - mu.sum();
  ev.gradient = augmented_sum(cell_features, counts - mu);
  ev.hessian = -augmented_gram(cell_features, mu);
  return ev;
}

BinnedCounts bin_presence(const Locations& presence, const Locations& background,
                          const Domain& domain) {
  const int d = domain.dim();
  if (presence.cols() != d || background.cols() != d) {
    throw InvalidArgument("bin_presence: locations do not match domain dimension");
  }
  const auto n0 = static_cast<std::size_t>(background.rows());
  const std::size_t m = grid_side(n0, d);
  const Locations grid = sample_background(domain, n0, BackgroundMode::grid, 0);
  const double tol = 1e-9;
  for (Eigen::Index i = 0; i < background.rows(); ++i) {
    for (int a = 0; a < d; ++a) {
      const auto& b = domain.bounds()[a];
      if (std::abs(background(i, a) - grid(i, a)) > tol * (b.hi - b.lo)) {
        throw InvalidArgument(
            "bin_presence: background is not a regular grid (row " +
            std::to_string(i) + ")");
      }
    }
  }

  BinnedCounts out;
  out.counts.assign(n0, 0);
  out.cell_of_presence.reserve(static_cast<std::size_t>(presence.rows()));
  out.cell_area = domain.area() / static_cast<double>(n0);
  for (Eigen::Index i = 0; i < presence.rows(); ++i) {
    std::size_t cell = 0;
    for (int a = 0; a < d; ++a) {
      const auto& b = domain.bounds()[a];
      const double h = (b.hi - b.lo) / static_cast<double>(m);
      const double z = presence(i, a);
      const double t = (z - b.lo) / h - 0.5;
      auto lower = static_cast<long long>(std::floor(t));
      lower = std::clamp<long long>(lower, 0, static_cast<long long>(m) - 1);
      std::size_t k = static_cast<std::size_t>(lower);
      if (k + 1 < m) {
        const double d_lo = std::abs(z - (b.lo + (static_cast<double>(k) + 0.5) * h));
        const double d_hi = std::abs(z - (b.lo + (static_cast<double>(k) + 1.5) * h));
        if (d_hi < d_lo) ++k;
      }
      cell = cell * m + k;
    }
    ++out.counts[cell];
    out.cell_of_presence.push_back(cell);
  }
  return out;
}

BinnedCounts bin_presence_by_features(const Dataset& data) {
  const auto pres = data.presence();
  const auto bg = data.background();
  BinnedCounts out;
  out.counts.assign(static_cast<std::size_t>(data.n0()), 0);
  out.cell_area = data.domain_area() / static_cast<double>(data.n0());
  for (Index i = 0; i < pres.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < bg.rows(); ++k) {
      const double dist = (bg.row(k) - pres.row(i)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    ++out.counts[static_cast<std::size_t>(best)];
    out.cell_of_presence.push_back(static_cast<std::size_t>(best));
  }
  return out;
}

}  // namespace ponly
