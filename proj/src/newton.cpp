#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ponly/errors.hpp"
#include "ponly/solvers.hpp"

namespace ponly {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Penalty strengths laid out over the full parameter vector.
struct PenaltyLayout {
  VectorXd l1;
  VectorXd l2;
  bool any_l1 = false;

  PenaltyLayout(const Penalty& penalty, Index dim, Index unpenalized)
      : l1(VectorXd::Zero(dim)), l2(VectorXd::Zero(dim)) {
    for (Index j = unpenalized; j < dim; ++j) {
      l1(j) = penalty.l1_strength(j - unpenalized);
      l2(j) = penalty.l2_strength(j - unpenalized);
    }
    any_l1 = (l1.array() > 0.0).any();
  }

  double value(const VectorXd& x) const {
    return l1.dot(x.cwiseAbs()) + 0.5 * l2.dot(x.cwiseProduct(x));
  }
};

struct Iterate {
  VectorXd x;
  ObjectiveEval ev;
  VectorXd grad;     // gradient of the smooth part of F = -f + J_l2
  MatrixXd hess;     // its Hessian
  double F = 0.0;    // full penalized objective to minimize
  double residual = 0.0;
};

Iterate make_iterate(const SmoothObjective& obj, const PenaltyLayout& pen,
                     VectorXd x) {
  Iterate it;
  it.ev = obj.evaluate(x);
  if (!std::isfinite(it.ev.value) || !it.ev.gradient.allFinite() ||
      !it.ev.hessian.allFinite()) {
    throw InfeasiblePoint(0, std::numeric_limits<double>::quiet_NaN());
  }
  it.grad = -it.ev.gradient + pen.l2.cwiseProduct(x);
  it.hess = -it.ev.hessian;
  it.hess.diagonal() += pen.l2;
  it.F = -it.ev.value + pen.value(x);
  double worst = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    double r;
    if (pen.l1(j) == 0.0) {
      r = std::abs(it.grad(j));
    } else if (x(j) != 0.0) {
      r = std::abs(it.grad(j) + std::copysign(pen.l1(j), x(j)));
    } else {
      r = std::max(0.0, std::abs(it.grad(j)) - pen.l1(j));
    }
    worst = std::max(worst, r);
  }
  it.residual = worst / obj.scale;
  it.x = std::move(x);
  return it;
}

// argmin_v g'(v - x) + 1/2 (v - x)'H(v - x) + sum_j l1_j |v_j|
VectorXd proximal_newton_point(const Iterate& it, const PenaltyLayout& pen) {
  const Index n = it.x.size();
  VectorXd v = it.x;
  VectorXd hd = VectorXd::Zero(n);  // H (v - x)
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double biggest = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double hjj = it.hess(j, j);
      if (!(hjj > 0.0)) {
        throw RankDeficiency("zero curvature in coordinate " + std::to_string(j),
                             VectorXd::Unit(n, j));
      }
      const double g = it.grad(j) + hd(j);
      const double updated = soft_threshold(v(j) - g / hjj, pen.l1(j) / hjj);
      const double change = updated - v(j);
      if (change != 0.0) {
        hd += change * it.hess.col(j);
        v(j) = updated;
        biggest = std::max(biggest, std::abs(change) / (1.0 + std::abs(updated)));
      }
    }
    if (biggest <= 1e-15) break;
  }
  return v;
}

std::string describe_direction(const VectorXd& d) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Index j = 0; j < d.size(); ++j) os << (j ? ", " : "") << d(j);
  os << "]";
  return os.str();
}

}  // namespace

NewtonResult newton_solve(const SmoothObjective& objective, VectorXd start,
                          const Penalty& penalty, const OptimOptions& opts) {
  opts.validate();
  const Index dim = start.size();
  if (objective.unpenalized < 0 || objective.unpenalized > dim) {
    throw InvalidArgument("newton_solve: bad unpenalized count");
  }
  penalty.validate(dim - objective.unpenalized);
  if (!start.allFinite()) throw InvalidArgument("newton_solve: start not finite");
  const PenaltyLayout pen(penalty, dim, objective.unpenalized);

  Iterate it = make_iterate(objective, pen, std::move(start));
  int iter = 0;
  for (;; ++iter) {
    if (it.residual <= opts.grad_tol) break;
    if (iter >= opts.max_iter) {
      throw NonConvergence("Newton: iteration limit " + std::to_string(opts.max_iter) +
                               " reached (residual " + std::to_string(it.residual) + ")",
                           it.x, iter, it.residual);
    }
    const VectorXd slopes = it.x.tail(dim - objective.unpenalized);
    const double slope_size = slopes.size() ? slopes.cwiseAbs().maxCoeff() : 0.0;
    if (slope_size > opts.divergence_bound) {
      throw NonConvergence("divergence: slopes escaping along " +
                               describe_direction(slopes.normalized()),
                           it.x, iter, it.residual, slopes.normalized());
    }

    VectorXd step;
    if (!pen.any_l1) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(it.hess);
      const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
      if (!(eig.eigenvalues()(0) > 1e-11 * top)) {
        const VectorXd null_dir = eig.eigenvectors().col(0);
        if (slope_size > 20.0) {
          throw NonConvergence("divergence: Hessian vanishing as slopes grow along " +
                                   describe_direction(slopes.normalized()),
                               it.x, iter, it.residual, slopes.normalized());
        }
        throw RankDeficiency("singular Hessian: features are collinear along " +
                                 describe_direction(null_dir),
                             null_dir);
      }
      step = -eig.eigenvectors() *
             (eig.eigenvalues().cwiseInverse().asDiagonal() *
              (eig.eigenvectors().transpose() * it.grad));
    } else {
      step = proximal_newton_point(it, pen) - it.x;
    }
    // Predicted decrease of the composite objective along the step.
    const double predicted =
        it.grad.dot(step) + pen.l1.dot((it.x + step).cwiseAbs() - it.x.cwiseAbs());

    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= opts.shrink) {
      Iterate trial;
      try {
        trial = make_iterate(objective, pen, it.x + t * step);
      } catch (const InfeasiblePoint&) {
        continue;
      }
      const bool armijo = trial.F <= it.F + opts.sufficient_decrease * t * predicted;
      // Near the optimum F changes below its rounding error; accept steps
      // that shrink the residual without increasing F beyond that noise.
      const double noise = 1e-13 * (1.0 + std::abs(it.F));
      const bool refines = trial.residual < it.residual && trial.F <= it.F + noise;
      if (armijo || refines) {
        it = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergence("line search stalled (residual " +
                               std::to_string(it.residual) + ")",
                           it.x, iter, it.residual);
    }
  }

  NewtonResult out;
  out.params = it.x;
  out.at_optimum = std::move(it.ev);
  out.iterations = iter;
  out.grad_norm = it.residual;
  out.converged = true;
  return out;
}

}  // namespace ponly
