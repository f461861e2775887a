#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace ponly {

/// Axis-aligned study region D with |D| = product of extents.
class Domain {
 public:
  struct Interval {
    double lo;
    double hi;
  };

  explicit Domain(std::vector<Interval> bounds);

  static Domain interval(double lo, double hi) { return Domain({{lo, hi}}); }
  static Domain unit(int dim);

  int dim() const { return static_cast<int>(bounds_.size()); }
  double area() const { return area_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& z) const;

 private:
  std::vector<Interval> bounds_;
  double area_;
};

/// One location per row, one column per domain axis.
using Locations = Eigen::MatrixXd;

/// Maps a location z in D to its feature vector x(z).
using FeatureMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

FeatureMap identity_features();

/// Feature matrix with row i = feature_map(locations.row(i)).
Eigen::MatrixXd apply_features(const FeatureMap& feature_map,
                               const Locations& locations);

struct IntensityComponent {
  double log_weight = 0.0;
  double alpha = 0.0;
  Eigen::VectorXd beta;
};

/// lambda(x) = sum_k exp(log_weight_k + alpha_k + beta_k'x). A single
/// component is the log-linear model exp(alpha + beta'x).
class IntensityModel {
 public:
  enum class Kind { log_linear, mixture };

  explicit IntensityModel(std::vector<IntensityComponent> components);
  static IntensityModel log_linear(double alpha, Eigen::VectorXd beta);

  Kind kind() const {
    return components_.size() == 1 ? Kind::log_linear : Kind::mixture;
  }
  int dim() const { return static_cast<int>(components_.front().beta.size()); }
  const std::vector<IntensityComponent>& components() const {
    return components_;
  }

  double log_intensity(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double intensity(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  std::vector<IntensityComponent> components_;
};

/// Occurrence process observed through log-linear detection:
/// sightings intensity = occurrence(x1) * s(x2), s = exp(gamma + delta'x2),
/// with x1 and x2 disjoint subsets of the feature vector.
class ThinningModel {
 public:
  ThinningModel(double gamma, Eigen::VectorXd delta,
                std::vector<int> detection_features, IntensityModel occurrence,
                std::vector<int> occurrence_features);

  /// Constant detection probability, no occurrence structure.
  static ThinningModel constant(double probability);

  double gamma() const { return gamma_; }
  const Eigen::VectorXd& delta() const { return delta_; }
  const std::vector<int>& detection_features() const { return detection_; }
  const std::vector<int>& occurrence_features() const { return occ_idx_; }
  const IntensityModel& occurrence() const { return occurrence_; }

  /// s(x); throws ModelInvalid when s falls outside [0, 1].
  double detection_probability(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Occurrence intensity lifted to the full p-dimensional feature vector.
  IntensityModel occurrence_on(int p) const;

  /// Log-linear sightings model (alpha~ + gamma, [beta~; delta]) on the full
  /// feature vector. Requires a log-linear occurrence model.
  IntensityModel sightings_on(int p) const;

 private:
  double gamma_;
  Eigen::VectorXd delta_;
  std::vector<int> detection_;
  IntensityModel occurrence_;
  std::vector<int> occ_idx_;
};

enum class BackgroundMode { uniform, grid };

/// n0 uniform draws, or the n0 = m^d cell centers of a regular lattice in
/// lexicographic order (first axis slowest).
Locations sample_background(const Domain& domain, std::size_t n0,
                            BackgroundMode mode, std::uint64_t seed);

/// Number of cells per axis of a grid background with n0 cells; throws
/// InvalidArgument when n0 is not a perfect d-th power.
std::size_t grid_side(std::size_t n0, int dim);

struct IntensityProbe {
  double total = 0.0;  ///< Lambda(D) by the midpoint rule on the probe grid
  double max = 0.0;    ///< max lambda over probe nodes
};

/// Evaluates lambda on a ~1e4-node midpoint lattice over D.
IntensityProbe probe_intensity(const IntensityModel& model, const Domain& domain,
                               const FeatureMap& feature_map);

/// One realization of the IPP: N ~ Poisson(Lambda(D)), then N points with
/// density lambda / Lambda(D) by rejection against 1.2 * probe max.
Locations simulate_ipp(const IntensityModel& model, const Domain& domain,
                       const FeatureMap& feature_map, std::uint64_t seed);

/// Keeps each point independently with probability s(x(z)), order preserved.
Locations thin_process(const Locations& points, const ThinningModel& model,
                       const FeatureMap& feature_map, std::uint64_t seed);

/// Presence/background rows with the domain area and quadrature weights.
/// Rows are stored presence first; quadrature weights default to |D|/n0.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd presence, Eigen::MatrixXd background,
          double domain_area,
          std::optional<Eigen::VectorXd> quad_weights = std::nullopt);

  Eigen::Index n1() const { return n1_; }
  Eigen::Index n0() const { return n0_; }
  Eigen::Index rows() const { return n1_ + n0_; }
  Eigen::Index p() const { return features_.cols(); }
  double domain_area() const { return area_; }

  const Eigen::MatrixXd& features() const { return features_; }
  auto presence() const { return features_.topRows(n1_); }
  auto background() const { return features_.bottomRows(n0_); }

  /// Quadrature weights of the background rows (length n0).
  const Eigen::VectorXd& weights() const { return weights_; }
  bool has_explicit_weights() const { return explicit_weights_; }

  int label(Eigen::Index row) const { return row < n1_ ? 1 : 0; }
  Eigen::VectorXd labels() const;

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd weights_;
  Eigen::Index n1_;
  Eigen::Index n0_;
  double area_;
  bool explicit_weights_;
};

Dataset assemble_dataset(const Locations& presence, const Locations& background,
                         const FeatureMap& feature_map, double domain_area,
                         std::optional<Eigen::VectorXd> quad_weights = std::nullopt);

}  // namespace ponly
