#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ponly/data.hpp"
#include "ponly/solvers.hpp"

namespace ponly {

/// Outcome of one numerical identity check. pass <=> max_abs_diff <= tolerance.
struct EquivalenceReport {
  std::string check;
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::optional<std::uint64_t> dataset_seed;
  std::string penalty;
  /// Secondary quantities (named) that make up max_abs_diff.
  std::vector<std::pair<std::string, double>> details;
};

inline constexpr double kExactTolerance = 1e-8;
inline constexpr double kLimitTolerance = 1e-6;

/// Fits ipp and maxent; reports |beta_maxent - beta_ipp|_inf.
EquivalenceReport check_prop1(const Dataset& data, const Penalty& penalty = {},
                              const OptimOptions& opts = {},
                              double tolerance = kExactTolerance);

/// Fits iwlr and ipp; reports the larger of |beta_iwlr - beta_ipp|_inf and
/// the implied-alpha gap. A `forced_W` fits logistic at that W instead of
/// running the escalation.
EquivalenceReport check_prop2(const Dataset& data, const Penalty& penalty = {},
                              const OptimOptions& opts = {},
                              double tolerance = kLimitTolerance,
                              std::optional<double> forced_W = std::nullopt);

/// Score equations of the numerical IPP at an ipp or maxent fit:
/// normalization |sum w exp(alpha + beta'x) - n1| / n1 and the moment
/// condition. For penalized fits the moment residual is measured as the
/// minimum-norm subgradient of the penalized score (standardized scale,
/// divided by n1); details also report the raw moment gap.
EquivalenceReport check_scores(const ModelFit& fit, const Dataset& data,
                               double tolerance = kExactTolerance);

/// Case-control intercept relation for a correctly specified log-linear
/// truth. Unweighted fits: eta_hat vs alpha + log(n1 |D| / (n0 Lambda(D))).
/// Weighted fits: implied alpha_hat = eta_hat + log(W n0 / |D|) vs
/// alpha + log(n1 / Lambda(D)). Default tolerance is 3 standard errors of
/// the fitted intercept from the observed information. Mixture truths are
/// refused with InvalidArgument.
EquivalenceReport check_eta_relation(const ModelFit& lr_fit, const Dataset& data,
                                     const IntensityModel& truth,
                                     double total_intensity,
                                     std::optional<double> tolerance = std::nullopt);

/// Deterministic random dataset for the standard equivalence sweep:
/// p in 1..5, n1 in [5, 200], n0 in [10, 2000]. Draws whose unpenalized
/// IPP maximizer does not exist (presence mean outside the background hull)
/// are redrawn from the next sub-stream.
Dataset random_sweep_dataset(std::uint64_t seed);

struct SweepCheckConfig {
  int datasets = 50;
  std::uint64_t seed = 20130101;
  std::vector<Penalty> penalties = {Penalty::none(), Penalty::l2(0.3), Penalty::l1(0.1)};
  double prop1_tolerance = kExactTolerance;
  double prop2_tolerance = kLimitTolerance;
};

/// check_prop1 and check_prop2 for every (dataset, penalty) pair.
std::vector<EquivalenceReport> run_equivalence_sweep(const SweepCheckConfig& config,
                                                     const OptimOptions& opts = {});

}  // namespace ponly
