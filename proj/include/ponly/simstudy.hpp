#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ponly/data.hpp"
#include "ponly/solvers.hpp"

namespace ponly {

/// One-covariate misspecification study. Background features follow
/// p0 = N(0, 1); presence features follow a mixture of unit-variance
/// normals centered at the subspecies slopes.
///
/// Two readings of the mixture weights are supported:
///  - population_proportion: p1 = sum_k pi_k N(b_k, 1), so
///    E_p1(x) = sum_k pi_k b_k (1.325 for the default spec);
///  - intensity_weighted: lambda(x) = sum_k pi_k exp(b_k x), giving
///    component weights proportional to pi_k exp(b_k^2 / 2).
struct MixtureSpec1D {
  enum class Variant { population_proportion, intensity_weighted };

  std::vector<double> proportions{0.95, 0.05};
  std::vector<double> slopes{1.5, -2.0};
  Variant variant = Variant::population_proportion;

  /// Correctly specified control: presence ~ N(mean, 1).
  static MixtureSpec1D single(double mean);

  void validate() const;
  /// Normalized weights of the N(b_k, 1) components of p1.
  std::vector<double> presence_weights() const;
  /// E_p1(x), closed form.
  double mu1() const;
  double p0(double x) const;
  double p1(double x) const;
};

const char* to_string(MixtureSpec1D::Variant v);
MixtureSpec1D::Variant variant_from_string(const std::string& name);

/// x ~ p1, one per row.
Eigen::VectorXd draw_presence_features(const MixtureSpec1D& spec, std::size_t n,
                                       std::uint64_t seed);
/// x ~ N(0, 1), one per row.
Eigen::VectorXd draw_background_features(std::size_t n, std::uint64_t seed);

/// Presence rows from stream 0 of `seed`, background from stream 1,
/// domain_area = 1.
Dataset draw_study_data(const MixtureSpec1D& spec, std::size_t n1, std::size_t n0,
                        std::uint64_t seed);

/// Integral of f over [lo, hi] by adaptive Gauss-Kronrod (61 points);
/// throws NonConvergence when the error estimate exceeds `abs_tol`.
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-10);

struct LrLimit {
  double eta;   ///< -infinity on the ratio -> 0 branch
  double beta;
};

/// Large-sample limit of unweighted logistic regression when presence and
/// background features arrive in ratio n1/n0 = `ratio`: solves
///   ratio * E_p1[(1 - s)(1, x)] = E_p0[s (1, x)],  s = sigmoid(eta + beta x),
/// by Newton's method with quadrature over [-10, 10]. ratio = 0 returns the
/// IPP limit beta = mu1.
LrLimit population_lr_limit(const MixtureSpec1D& spec, double ratio);

enum class Estimator { iwlr, lr };

const char* to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct SweepConfig {
  std::size_t n1 = 3000;
  std::vector<std::size_t> n0_grid{1000, 3000, 10000, 30000, 100000, 300000};
  int replicates = 20;
  std::vector<Estimator> estimators{Estimator::iwlr, Estimator::lr};
  std::uint64_t seed = 4519;
  MixtureSpec1D spec;
  /// Upper bound on worker threads; 0 = hardware concurrency.
  unsigned threads = 0;
};

struct SweepCell {
  Estimator estimator;
  std::size_t n0;
  int replicate;
  std::optional<double> beta_hat;  ///< empty when the fit failed
  std::string failure;
};

struct SweepResult {
  SweepConfig config;
  double beta_limit = 0.0;     ///< population limit as n0 -> infinity
  double presence_mean = 0.0;  ///< mean of the fixed presence sample
  std::vector<SweepCell> cells;  ///< ordered by (n0, replicate, estimator)

  /// Mean beta_hat over successful replicates of one (estimator, n0) cell.
  double mean(Estimator e, std::size_t n0) const;
  double sd(Estimator e, std::size_t n0) const;
  std::vector<double> values(Estimator e, std::size_t n0) const;
};

/// One fixed presence sample of size n1 (stream 0 of seed); for every
/// (n0, replicate) a fresh background from a seed derived from
/// (seed, n0 index, replicate). Failed fits are recorded, not thrown.
SweepResult run_sweep(const SweepConfig& config, const OptimOptions& opts = {});

}  // namespace ponly
