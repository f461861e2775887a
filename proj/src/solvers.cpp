#include "ponly/solvers.hpp"

#include <cmath>
#include <string>

#include "ponly/errors.hpp"

namespace ponly {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------- Penalty

const char* to_string(Penalty::Kind kind) {
  switch (kind) {
    case Penalty::Kind::none: return "none";
    case Penalty::Kind::l1: return "l1";
    case Penalty::Kind::l2: return "l2";
    case Penalty::Kind::elastic: return "elastic";
  }
  return "?";
}

Penalty::Kind penalty_kind_from_string(const std::string& name) {
  if (name == "none") return Penalty::Kind::none;
  if (name == "l1") return Penalty::Kind::l1;
  if (name == "l2") return Penalty::Kind::l2;
  if (name == "elastic") return Penalty::Kind::elastic;
  throw InvalidArgument("unknown penalty '" + name + "'");
}

void Penalty::validate(Index p) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InvalidArgument("penalty lambda must be finite and >= 0");
  }
  if (!(mix >= 0.0 && mix <= 1.0)) {
    throw InvalidArgument("penalty mix must lie in [0, 1]");
  }
  if (weights.size() != 0) {
    if (weights.size() != p) {
      throw InvalidArgument("penalty weights must have one entry per slope");
    }
    if (!weights.allFinite() || (weights.array() < 0.0).any()) {
      throw InvalidArgument("penalty weights must be finite and >= 0");
    }
  }
}

namespace {
double coef_weight(const Penalty& pen, Index j) {
  return pen.weights.size() ? pen.weights(j) : 1.0;
}
}  // namespace

double Penalty::l1_strength(Index j) const {
  switch (kind) {
    case Kind::l1: return lambda * coef_weight(*this, j);
    case Kind::elastic: return lambda * mix * coef_weight(*this, j);
    default: return 0.0;
  }
}

double Penalty::l2_strength(Index j) const {
  switch (kind) {
    case Kind::l2: return lambda * coef_weight(*this, j);
    case Kind::elastic: return lambda * (1.0 - mix) * coef_weight(*this, j);
    default: return 0.0;
  }
}

bool Penalty::has_l1() const {
  return (kind == Kind::l1 || kind == Kind::elastic) && lambda * mix > 0.0;
}

double Penalty::value(const VectorXd& beta) const {
  double total = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    total += l1_strength(j) * std::abs(beta(j)) +
             0.5 * l2_strength(j) * beta(j) * beta(j);
  }
  return total;
}

std::string Penalty::describe() const {
  std::string s = to_string(kind);
  if (kind != Kind::none) s += "(lambda=" + std::to_string(lambda) + ")";
  if (kind == Kind::elastic) s += "(mix=" + std::to_string(mix) + ")";
  return s;
}

void OptimOptions::validate() const {
  const bool ok = grad_tol > 0.0 && grad_tol < 1.0 && max_iter > 0 && shrink > 0.0 &&
                  shrink < 1.0 && sufficient_decrease > 0.0 &&
                  sufficient_decrease < 1.0 && divergence_bound > 0.0 &&
                  W_initial >= 1.0 && W_target_maxfit > 0.0 && W_target_slack >= 1.0 && W_growth > 1.0 &&
                  W_change_tol > 0.0 && W_max_escalations >= 0 &&
                  W_max_stability_refits >= 1;
  if (!ok) throw InvalidArgument("OptimOptions: values out of range");
}

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::ipp: return "ipp";
    case ModelKind::maxent: return "maxent";
    case ModelKind::logistic: return "lr";
    case ModelKind::iwlr: return "iwlr";
    case ModelKind::poisson_llm: return "berman-turner";
  }
  return "?";
}

// ---------------------------------------------------------------- standardization

Standardization Standardization::from_background(const MatrixXd& background,
                                                 const VectorXd& weights) {
  const VectorXd w = weights / weights.sum();
  Standardization s;
  s.center = background.transpose() * w;
  const MatrixXd centered = background.rowwise() - s.center.transpose();
  s.scale = (centered.array().square().colwise() * w.array()).colwise().sum().sqrt().transpose();
  for (Index j = 0; j < s.scale.size(); ++j) {
    const double magnitude = 1.0 + std::abs(s.center(j));
    if (!(s.scale(j) > 1e-12 * magnitude)) {
      throw RankDeficiency("feature " + std::to_string(j) +
                               " is constant on the background",
                           VectorXd::Unit(s.scale.size(), j));
    }
  }
  return s;
}

MatrixXd Standardization::apply(const MatrixXd& x) const {
  return ((x.rowwise() - center.transpose()).array().rowwise() /
          scale.transpose().array())
      .matrix();
}

Dataset Standardization::apply(const Dataset& data) const {
  std::optional<VectorXd> w;
  if (data.has_explicit_weights()) w = data.weights();
  return Dataset(apply(MatrixXd(data.presence())), apply(MatrixXd(data.background())),
                 data.domain_area(), std::move(w));
}

VectorXd Standardization::slopes_to_original(const VectorXd& beta_std) const {
  return beta_std.cwiseQuotient(scale);
}

double Standardization::intercept_to_original(double intercept_std,
                                              const VectorXd& beta_std) const {
  return intercept_std - slopes_to_original(beta_std).dot(center);
}

VectorXd Standardization::slopes_to_standard(const VectorXd& beta) const {
  return beta.cwiseProduct(scale);
}

double Standardization::intercept_to_standard(double intercept,
                                              const VectorXd& beta) const {
  return intercept + beta.dot(center);
}

// ---------------------------------------------------------------- fits

namespace {

double normalized_log_sum(const MatrixXd& x, const VectorXd& beta, const VectorXd& w) {
  const VectorXd u = x * beta;
  const double top = u.maxCoeff();
  return top + std::log((w.array() * (u.array() - top).exp()).sum());
}

ModelFit base_fit(ModelKind kind, const Dataset& data, const Penalty& penalty,
                  const NewtonResult& res) {
  ModelFit fit;
  fit.model = kind;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.grad_norm = res.grad_norm;
  fit.penalty = penalty;
  fit.n1 = data.n1();
  fit.n0 = data.n0();
  fit.domain_area = data.domain_area();
  return fit;
}

VectorXd intensities(const Dataset& data, double alpha, const VectorXd& beta) {
  return ((data.features() * beta).array() + alpha).exp().matrix();
}

// Logistic fit on already-standardized data from a standardized start.
struct LogisticState {
  NewtonResult res;
  double eta_std = 0.0;
  VectorXd beta_std;
};

LogisticState solve_logistic(const Dataset& zdata, double W, const Penalty& penalty,
                             const OptimOptions& opts, VectorXd start) {
  SmoothObjective obj;
  obj.unpenalized = 1;
  obj.scale = static_cast<double>(zdata.n1());
  obj.evaluate = [&zdata, W](const VectorXd& th) {
    return logistic_loglik(th(0), th.tail(th.size() - 1), zdata, W);
  };
  LogisticState st;
  st.res = newton_solve(obj, std::move(start), penalty, opts);
  st.eta_std = st.res.params(0);
  st.beta_std = st.res.params.tail(zdata.p());
  const bool unpenalized = penalty.kind == Penalty::Kind::none || penalty.lambda == 0.0;
  if (unpenalized && !st.beta_std.isZero(0.0)) {
    const VectorXd lp = zdata.features() * st.beta_std;
    if (lp.head(zdata.n1()).minCoeff() > lp.tail(zdata.n0()).maxCoeff()) {
      throw NonConvergence("divergence: presence and background points are linearly separated",
                           st.res.params, st.res.iterations, st.res.grad_norm,
                           st.beta_std.normalized());
    }
  }
  return st;
}

ModelFit finish_logistic(ModelKind kind, const Dataset& data,
                         const Standardization& stdz, double W,
                         const Penalty& penalty, const LogisticState& st) {
  ModelFit fit = base_fit(kind, data, penalty, st.res);
  fit.beta = stdz.slopes_to_original(st.beta_std);
  fit.eta = stdz.intercept_to_original(st.eta_std, st.beta_std);
  fit.W = W;
  fit.alpha = *fit.eta + std::log(W * static_cast<double>(data.n0()) / data.domain_area());
  const VectorXd t = (data.features() * fit.beta).array() + *fit.eta;
  fit.fitted = t.unaryExpr([](double v) { return sigmoid(v); });
  fit.max_fitted = fit.fitted.maxCoeff();
  fit.information = -logistic_loglik(*fit.eta, fit.beta, data, W).hessian;
  return fit;
}

VectorXd logistic_start(const Dataset& data, double W) {
  VectorXd start = VectorXd::Zero(data.p() + 1);
  start(0) = std::log(static_cast<double>(data.n1()) /
                      (W * static_cast<double>(data.n0())));
  return start;
}

}  // namespace

ModelFit fit_ipp(const Dataset& data, const Penalty& penalty, const OptimOptions& opts) {
  penalty.validate(data.p());
  const auto stdz = Standardization::from_background(data.background(), data.weights());
  const Dataset z = stdz.apply(data);
  SmoothObjective obj;
  obj.unpenalized = 1;
  obj.scale = static_cast<double>(data.n1());
  obj.evaluate = [&z](const VectorXd& th) {
    return ipp_loglik(th(0), th.tail(th.size() - 1), z);
  };
  VectorXd start = VectorXd::Zero(data.p() + 1);
  start(0) = std::log(static_cast<double>(data.n1()) / data.domain_area());
  const NewtonResult res = newton_solve(obj, start, penalty, opts);

  ModelFit fit = base_fit(ModelKind::ipp, data, penalty, res);
  const VectorXd beta_std = res.params.tail(data.p());
  fit.beta = stdz.slopes_to_original(beta_std);
  fit.alpha = stdz.intercept_to_original(res.params(0), beta_std);
  fit.fitted = intensities(data, *fit.alpha, fit.beta);
  fit.information = -ipp_loglik(*fit.alpha, fit.beta, data).hessian;
  return fit;
}

ModelFit fit_maxent(const Dataset& data, const Penalty& penalty,
                    const OptimOptions& opts) {
  penalty.validate(data.p());
  const auto stdz = Standardization::from_background(data.background(), data.weights());
  const Dataset z = stdz.apply(data);
  SmoothObjective obj;
  obj.unpenalized = 0;
  obj.scale = static_cast<double>(data.n1());
  obj.evaluate = [&z](const VectorXd& beta) { return maxent_loglik(beta, z); };
  const NewtonResult res = newton_solve(obj, VectorXd::Zero(data.p()), penalty, opts);

  ModelFit fit = base_fit(ModelKind::maxent, data, penalty, res);
  fit.beta = stdz.slopes_to_original(res.params);
  fit.alpha = std::log(static_cast<double>(data.n1())) -
              normalized_log_sum(MatrixXd(data.background()), fit.beta, data.weights());
  fit.fitted = intensities(data, *fit.alpha, fit.beta);
  fit.information = -maxent_loglik(fit.beta, data).hessian;
  return fit;
}

ModelFit fit_logistic(const Dataset& data, double W, const Penalty& penalty,
                      const OptimOptions& opts) {
  if (!(W >= 1.0) || !std::isfinite(W)) {
    throw InvalidArgument("fit_logistic: W must be finite and >= 1");
  }
  penalty.validate(data.p());
  const auto stdz = Standardization::from_background(data.background(), data.weights());
  const Dataset z = stdz.apply(data);
  const LogisticState st = solve_logistic(z, W, penalty, opts, logistic_start(data, W));
  return finish_logistic(ModelKind::logistic, data, stdz, W, penalty, st);
}

ModelFit fit_iwlr(const Dataset& data, const Penalty& penalty, const OptimOptions& opts) {
  opts.validate();
  penalty.validate(data.p());
  const auto stdz = Standardization::from_background(data.background(), data.weights());
  const Dataset z = stdz.apply(data);

  auto max_fitted = [&z](const LogisticState& st) {
    const VectorXd t = (z.features() * st.beta_std).array() + st.eta_std;
    return sigmoid(t.maxCoeff());
  };
  // Warm start at a new W: the slope is unchanged, eta shifts by -log ratio.
  auto warm = [](const LogisticState& st, double ratio) {
    VectorXd start = st.res.params;
    start(0) -= std::log(ratio);
    return start;
  };

  double W = opts.W_initial;
  LogisticState st = solve_logistic(z, W, penalty, opts, logistic_start(data, W));
  int rounds = 0;
  double top = max_fitted(st);
  while (top > opts.W_target_slack * opts.W_target_maxfit) {
    if (++rounds > opts.W_max_escalations) {
      throw NonConvergence("IWLR: W escalation exceeded " +
                               std::to_string(opts.W_max_escalations) + " rounds",
                           st.res.params, st.res.iterations, st.res.grad_norm);
    }
    const double ratio = top / opts.W_target_maxfit;
    W *= ratio;
    st = solve_logistic(z, W, penalty, opts, warm(st, ratio));
    top = max_fitted(st);
  }

  int refits = 0;
  double change = 0.0;
  for (;;) {
    const double W_next = W * opts.W_growth;
    LogisticState next =
        solve_logistic(z, W_next, penalty, opts, warm(st, opts.W_growth));
    change = (stdz.slopes_to_original(next.beta_std) -
              stdz.slopes_to_original(st.beta_std))
                 .cwiseAbs()
                 .maxCoeff();
    ++refits;
    W = W_next;
    st = std::move(next);
    if (change <= opts.W_change_tol) break;
    if (refits >= opts.W_max_stability_refits) {
      throw NonConvergence("IWLR: slopes still moving by " + std::to_string(change) +
                               " after " + std::to_string(refits) + " refits at 100x W",
                           st.res.params, st.res.iterations, st.res.grad_norm);
    }
  }

  ModelFit fit = finish_logistic(ModelKind::iwlr, data, stdz, W, penalty, st);
  fit.escalation_rounds = rounds;
  fit.stability_refits = refits;
  fit.last_W_change = change;
  return fit;
}

ModelFit fit_poisson_llm(const BinnedCounts& binned, const MatrixXd& cell_features,
                         const Penalty& penalty, const OptimOptions& opts) {
  const auto cells = static_cast<Index>(binned.cells());
  if (cells != cell_features.rows() || cells == 0) {
    throw InvalidArgument("fit_poisson_llm: counts and cell features differ");
  }
  const auto n1 = static_cast<double>(binned.total());
  if (n1 < 1.0) throw InvalidArgument("fit_poisson_llm: no presence counts");
  penalty.validate(cell_features.cols());
  const VectorXd uniform = VectorXd::Constant(cells, binned.cell_area);
  const auto stdz = Standardization::from_background(cell_features, uniform);
  const MatrixXd zcells = stdz.apply(cell_features);
  SmoothObjective obj;
  obj.unpenalized = 1;
  obj.scale = n1;
  obj.evaluate = [&](const VectorXd& th) {
    return poisson_llm_loglik(th(0), th.tail(th.size() - 1), binned, zcells);
  };
  const double area = binned.cell_area * static_cast<double>(cells);
  VectorXd start = VectorXd::Zero(cell_features.cols() + 1);
  start(0) = std::log(n1 / area);
  const NewtonResult res = newton_solve(obj, start, penalty, opts);

  ModelFit fit;
  fit.model = ModelKind::poisson_llm;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.grad_norm = res.grad_norm;
  fit.penalty = penalty;
  fit.n1 = static_cast<Index>(binned.total());
  fit.n0 = cells;
  fit.domain_area = area;
  const VectorXd beta_std = res.params.tail(cell_features.cols());
  fit.beta = stdz.slopes_to_original(beta_std);
  fit.alpha = stdz.intercept_to_original(res.params(0), beta_std);
  fit.fitted = ((cell_features * fit.beta).array() + *fit.alpha).exp().matrix();
  fit.information = -poisson_llm_loglik(*fit.alpha, fit.beta, binned, cell_features).hessian;
  return fit;
}

}  // namespace ponly
