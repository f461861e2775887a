#include "ponly/simstudy.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>
#include <tuple>

#include "ponly/errors.hpp"
#include "ponly/rng.hpp"

namespace ponly {

using Eigen::VectorXd;

// ---------------------------------------------------------------- spec

MixtureSpec1D MixtureSpec1D::single(double mean) {
  MixtureSpec1D s;
  s.proportions = {1.0};
  s.slopes = {mean};
  return s;
}

void MixtureSpec1D::validate() const {
  if (proportions.empty() || proportions.size() != slopes.size()) {
    throw InvalidArgument("MixtureSpec1D: proportions and slopes must pair up");
  }
  double total = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw InvalidArgument("MixtureSpec1D: proportions must be > 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("MixtureSpec1D: proportions must sum to 1");
  }
  for (double b : slopes) {
    if (!std::isfinite(b)) throw InvalidArgument("MixtureSpec1D: non-finite slope");
  }
}

std::vector<double> MixtureSpec1D::presence_weights() const {
  validate();
  std::vector<double> w = proportions;
  if (variant == Variant::intensity_weighted) {
    // int pi_k exp(b_k x) phi(x) dx = pi_k exp(b_k^2 / 2)
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] *= std::exp(0.5 * slopes[k] * slopes[k]);
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) v /= total;
  }
  return w;
}

double MixtureSpec1D::mu1() const {
  // Compensated dot product (Ogita, Rump and Oishi).
  const auto w = presence_weights();
  double sum = 0.0, err = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double prod = w[k] * slopes[k];
    const double prod_err = std::fma(w[k], slopes[k], -prod);
    const double t = sum + prod;
    const double z = t - sum;
    err += (sum - (t - z)) + (prod - z) + prod_err;
    sum = t;
  }
  return sum + err;
}

double MixtureSpec1D::p0(double x) const {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double MixtureSpec1D::p1(double x) const {
  const auto w = presence_weights();
  double d = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) d += w[k] * p0(x - slopes[k]);
  return d;
}

const char* to_string(MixtureSpec1D::Variant v) {
  return v == MixtureSpec1D::Variant::population_proportion ? "population_proportion"
                                                            : "intensity_weighted";
}

MixtureSpec1D::Variant variant_from_string(const std::string& name) {
  if (name == "population_proportion") return MixtureSpec1D::Variant::population_proportion;
  if (name == "intensity_weighted") return MixtureSpec1D::Variant::intensity_weighted;
  throw InvalidArgument("unknown spec variant '" + name + "'");
}

// ---------------------------------------------------------------- sampling

VectorXd draw_presence_features(const MixtureSpec1D& spec, std::size_t n,
                                std::uint64_t seed) {
  const auto w = spec.presence_weights();
  std::vector<double> cdf(w.size());
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  Rng rng(seed);
  VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double u = rng.uniform() * cdf.back();
    const auto k = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    x(i) = rng.normal(spec.slopes[std::min(k, w.size() - 1)], 1.0);
  }
  return x;
}

VectorXd draw_background_features(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  return x;
}

Dataset draw_study_data(const MixtureSpec1D& spec, std::size_t n1, std::size_t n0,
                        std::uint64_t seed) {
  return Dataset(draw_presence_features(spec, n1, derive_seed(seed, 0)),
                 draw_background_features(n0, derive_seed(seed, 1)), 1.0);
}

// ---------------------------------------------------------------- population limit

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 10, 1e-13, &error);
  if (!std::isfinite(value) || error > abs_tol) {
    throw NonConvergence("quadrature error estimate " + std::to_string(error) +
                             " exceeds " + std::to_string(abs_tol),
                         VectorXd(), 0, error);
  }
  return value;
}

LrLimit population_lr_limit(const MixtureSpec1D& spec, double ratio) {
  spec.validate();
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw InvalidArgument("population_lr_limit: ratio must be finite and >= 0");
  }
  if (ratio == 0.0) {
    return {-std::numeric_limits<double>::infinity(), spec.mu1()};
  }
  constexpr double lo = -10.0, hi = 10.0;
  const auto weights = spec.presence_weights();
  auto p1 = [&](double x) {
    double d = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) d += weights[k] * spec.p0(x - spec.slopes[k]);
    return d;
  };
  // Score and curvature of the per-background-point population likelihood
  //   ratio * E_p1[log s] + E_p0[log(1 - s)].
  auto moments = [&](double eta, double beta) {
    Eigen::Vector2d grad;
    Eigen::Matrix2d hess;
    double value = 0.0;
    auto term = [&](auto&& g) { return integrate(g, lo, hi); };
    value = term([&](double x) {
      const double t = eta + beta * x;
      return ratio * p1(x) * -log1pexp(-t) + spec.p0(x) * -log1pexp(t);
    });
    for (int k = 0; k < 2; ++k) {
      grad(k) = term([&](double x) {
        const double t = eta + beta * x;
        const double r = ratio * p1(x) * sigmoid(-t) - spec.p0(x) * sigmoid(t);
        return k == 0 ? r : r * x;
      });
    }
    for (int k = 0; k < 3; ++k) {
      const double h = term([&](double x) {
        const double t = eta + beta * x;
        const double c = (ratio * p1(x) + spec.p0(x)) * sigmoid(t) * sigmoid(-t);
        return k == 0 ? c : (k == 1 ? c * x : c * x * x);
      });
      if (k == 0) hess(0, 0) = -h;
      if (k == 1) hess(0, 1) = hess(1, 0) = -h;
      if (k == 2) hess(1, 1) = -h;
    }
    return std::tuple{value, grad, hess};
  };

  double eta = std::log(ratio);
  double beta = spec.mu1();
  for (int iter = 0; iter < 100; ++iter) {
    const auto [value, grad, hess] = moments(eta, beta);
    const Eigen::Vector2d step = -hess.ldlt().solve(grad);
    if (grad.cwiseAbs().maxCoeff() < 1e-11 || step.cwiseAbs().maxCoeff() < 1e-10) {
      return {eta, beta};
    }
    double t = 1.0;
    for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
      const auto [trial, g2, h2] = moments(eta + t * step(0), beta + t * step(1));
      (void)g2;
      (void)h2;
      if (trial >= value - 1e-14 * std::abs(value)) break;
    }
    eta += t * step(0);
    beta += t * step(1);
  }
  throw NonConvergence("population_lr_limit: Newton did not converge",
                       Eigen::Vector2d(eta, beta), 100, 0.0);
}

// ---------------------------------------------------------------- sweep

const char* to_string(Estimator e) { return e == Estimator::iwlr ? "iwlr" : "lr"; }

Estimator estimator_from_string(const std::string& name) {
  if (name == "iwlr") return Estimator::iwlr;
  if (name == "lr") return Estimator::lr;
  throw InvalidArgument("unknown estimator '" + name + "'");
}

std::vector<double> SweepResult::values(Estimator e, std::size_t n0) const {
  std::vector<double> out;
  for (const auto& c : cells) {
    if (c.estimator == e && c.n0 == n0 && c.beta_hat) out.push_back(*c.beta_hat);
  }
  return out;
}

double SweepResult::mean(Estimator e, std::size_t n0) const {
  const auto v = values(e, n0);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SweepResult::sd(Estimator e, std::size_t n0) const {
  const auto v = values(e, n0);
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(e, n0);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

SweepResult run_sweep(const SweepConfig& config, const OptimOptions& opts) {
  config.spec.validate();
  if (config.n1 == 0 || config.n0_grid.empty() || config.replicates < 1 ||
      config.estimators.empty()) {
    throw InvalidArgument("run_sweep: empty configuration");
  }
  for (auto n0 : config.n0_grid) {
    if (n0 == 0) throw InvalidArgument("run_sweep: n0 must be >= 1");
  }

  SweepResult result;
  result.config = config;
  result.beta_limit = population_lr_limit(config.spec, 0.0).beta;
  const VectorXd presence =
      draw_presence_features(config.spec, config.n1, derive_seed(config.seed, 0));
  result.presence_mean = presence.mean();

  struct Job {
    std::size_t grid_index;
    int replicate;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < config.n0_grid.size(); ++g) {
    for (int r = 0; r < config.replicates; ++r) jobs.push_back({g, r});
  }
  const std::size_t per_job = config.estimators.size();
  result.cells.resize(jobs.size() * per_job);

  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const std::size_t n0 = config.n0_grid[job.grid_index];
    const std::uint64_t bg_seed =
        derive_seed(derive_seed(config.seed, 1 + job.grid_index),
                    static_cast<std::uint64_t>(job.replicate));
    const Dataset data(presence, draw_background_features(n0, bg_seed), 1.0);
    for (std::size_t e = 0; e < per_job; ++e) {
      SweepCell& cell = result.cells[j * per_job + e];
      cell.estimator = config.estimators[e];
      cell.n0 = n0;
      cell.replicate = job.replicate;
      try {
        const ModelFit fit = cell.estimator == Estimator::iwlr
                                 ? fit_iwlr(data, Penalty::none(), opts)
                                 : fit_logistic(data, 1.0, Penalty::none(), opts);
        cell.beta_hat = fit.beta(0);
      } catch (const std::exception& ex) {
        cell.failure = ex.what();
      }
    }
  };

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(jobs.size()));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) run_job(j);
      });
    }
    for (auto& th : pool) th.join();
  }
  return result;
}

}  // namespace ponly
