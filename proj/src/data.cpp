#include "ponly/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "ponly/errors.hpp"
#include "ponly/rng.hpp"

namespace ponly {

// ---------------------------------------------------------------- Domain

Domain::Domain(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {
  if (bounds_.empty()) throw InvalidArgument("Domain: need at least one axis");
  area_ = 1.0;
  for (const auto& b : bounds_) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.hi > b.lo)) {
      throw InvalidArgument("Domain: every axis needs finite hi > lo");
    }
    area_ *= b.hi - b.lo;
  }
}

Domain Domain::unit(int dim) {
  if (dim < 1) throw InvalidArgument("Domain::unit: dim must be >= 1");
  return Domain(std::vector<Interval>(static_cast<std::size_t>(dim), {0.0, 1.0}));
}

bool Domain::contains(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (z(a) < bounds_[a].lo || z(a) > bounds_[a].hi) return false;
  }
  return true;
}

// ---------------------------------------------------------------- features

FeatureMap identity_features() {
  return [](const Eigen::VectorXd& z) { return z; };
}

Eigen::MatrixXd apply_features(const FeatureMap& feature_map,
                               const Locations& locations) {
  if (locations.rows() == 0) return Eigen::MatrixXd(0, 0);
  Eigen::VectorXd first = feature_map(locations.row(0).transpose());
  Eigen::MatrixXd out(locations.rows(), first.size());
  out.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < locations.rows(); ++i) {
    Eigen::VectorXd x = feature_map(locations.row(i).transpose());
    if (x.size() != first.size()) {
      throw InvalidArgument("feature map returned inconsistent dimensions");
    }
    out.row(i) = x.transpose();
  }
  return out;
}

// ---------------------------------------------------------------- intensity

IntensityModel::IntensityModel(std::vector<IntensityComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw InvalidArgument("IntensityModel: need at least one component");
  }
  const auto p = components_.front().beta.size();
  for (const auto& c : components_) {
    if (c.beta.size() != p) {
      throw InvalidArgument("IntensityModel: components differ in dimension");
    }
    if (!std::isfinite(c.log_weight) || !std::isfinite(c.alpha) ||
        !c.beta.allFinite()) {
      throw InvalidArgument("IntensityModel: non-finite parameter");
    }
  }
}

IntensityModel IntensityModel::log_linear(double alpha, Eigen::VectorXd beta) {
  return IntensityModel({IntensityComponent{0.0, alpha, std::move(beta)}});
}

double IntensityModel::log_intensity(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim()) {
    throw InvalidArgument("IntensityModel: feature dimension mismatch");
  }
  if (components_.size() == 1) {
    const auto& c = components_.front();
    return c.log_weight + c.alpha + c.beta.dot(x);
  }
  // log-sum-exp over components
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (const auto& c : components_) {
    terms.push_back(c.log_weight + c.alpha + c.beta.dot(x));
    top = std::max(top, terms.back());
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

double IntensityModel::intensity(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::exp(log_intensity(x));
}

// ---------------------------------------------------------------- thinning

ThinningModel::ThinningModel(double gamma, Eigen::VectorXd delta,
                             std::vector<int> detection_features,
                             IntensityModel occurrence,
                             std::vector<int> occurrence_features)
    : gamma_(gamma),
      delta_(std::move(delta)),
      detection_(std::move(detection_features)),
      occurrence_(std::move(occurrence)),
      occ_idx_(std::move(occurrence_features)) {
  if (static_cast<std::size_t>(delta_.size()) != detection_.size()) {
    throw InvalidArgument("ThinningModel: delta length must match x2 indices");
  }
  if (static_cast<std::size_t>(occurrence_.dim()) != occ_idx_.size()) {
    throw InvalidArgument(
        "ThinningModel: occurrence dimension must match x1 indices");
  }
  std::set<int> seen;
  for (int j : detection_) {
    if (j < 0 || !seen.insert(j).second) {
      throw InvalidArgument("ThinningModel: bad detection feature index");
    }
  }
  for (int j : occ_idx_) {
    if (j < 0 || !seen.insert(j).second) {
      throw InvalidArgument(
          "ThinningModel: occurrence and detection features must be disjoint");
    }
  }
  if (!std::isfinite(gamma_) || !delta_.allFinite()) {
    throw InvalidArgument("ThinningModel: non-finite detection parameter");
  }
}

ThinningModel ThinningModel::constant(double probability) {
  if (!(probability > 0.0 && probability <= 1.0)) {
    throw ModelInvalid("ThinningModel: constant detection must be in (0, 1]");
  }
  return ThinningModel(std::log(probability), Eigen::VectorXd(0), {},
                       IntensityModel::log_linear(0.0, Eigen::VectorXd(0)), {});
}

double ThinningModel::detection_probability(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double eta = gamma_;
  for (std::size_t k = 0; k < detection_.size(); ++k) {
    const int j = detection_[k];
    if (j >= x.size()) {
      throw InvalidArgument("ThinningModel: detection index out of range");
    }
    eta += delta_(static_cast<Eigen::Index>(k)) * x(j);
  }
  const double s = std::exp(eta);
  if (!(s >= 0.0 && s <= 1.0)) {
    throw ModelInvalid("detection probability " + std::to_string(s) +
                       " outside [0, 1]");
  }
  return s;
}

IntensityModel ThinningModel::occurrence_on(int p) const {
  std::vector<IntensityComponent> lifted;
  for (const auto& c : occurrence_.components()) {
    IntensityComponent full{c.log_weight, c.alpha, Eigen::VectorXd::Zero(p)};
    for (std::size_t k = 0; k < occ_idx_.size(); ++k) {
      if (occ_idx_[k] >= p) {
        throw InvalidArgument("ThinningModel: occurrence index out of range");
      }
      full.beta(occ_idx_[k]) = c.beta(static_cast<Eigen::Index>(k));
    }
    lifted.push_back(std::move(full));
  }
  return IntensityModel(std::move(lifted));
}

IntensityModel ThinningModel::sightings_on(int p) const {
  if (occurrence_.kind() != IntensityModel::Kind::log_linear) {
    throw InvalidArgument("sightings_on: occurrence model must be log-linear");
  }
  IntensityModel occ = occurrence_on(p);
  IntensityComponent c = occ.components().front();
  c.alpha += c.log_weight + gamma_;
  c.log_weight = 0.0;
  for (std::size_t k = 0; k < detection_.size(); ++k) {
    if (detection_[k] >= p) {
      throw InvalidArgument("ThinningModel: detection index out of range");
    }
    c.beta(detection_[k]) = delta_(static_cast<Eigen::Index>(k));
  }
  return IntensityModel({c});
}

// ---------------------------------------------------------------- sampling

std::size_t grid_side(std::size_t n0, int dim) {
  if (n0 == 0) throw InvalidArgument("grid background: n0 must be >= 1");
  const auto guess = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(n0), 1.0 / dim)));
  for (std::size_t m = guess > 0 ? guess - 1 : 0; m <= guess + 1; ++m) {
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= m;
    if (m > 0 && total == n0) return m;
  }
  throw InvalidArgument("grid background: n0 = " + std::to_string(n0) +
                        " is not a perfect power m^" + std::to_string(dim));
}

namespace {

// Cell centers of an m^d lattice, first axis slowest.
Locations lattice_centers(const Domain& domain, std::size_t m) {
  const int d = domain.dim();
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= m;
  Locations out(static_cast<Eigen::Index>(total), d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t k = rem % m;
      rem /= m;
      const auto& b = domain.bounds()[a];
      const double h = (b.hi - b.lo) / static_cast<double>(m);
      out(static_cast<Eigen::Index>(idx), a) =
          b.lo + (static_cast<double>(k) + 0.5) * h;
    }
  }
  return out;
}

}  // namespace

Locations sample_background(const Domain& domain, std::size_t n0,
                            BackgroundMode mode, std::uint64_t seed) {
  if (n0 == 0) throw InvalidArgument("sample_background: n0 must be >= 1");
  if (mode == BackgroundMode::grid) {
    return lattice_centers(domain, grid_side(n0, domain.dim()));
  }
  Rng rng(seed);
  Locations out(static_cast<Eigen::Index>(n0), domain.dim());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (int a = 0; a < domain.dim(); ++a) {
      out(i, a) = rng.uniform(domain.bounds()[a].lo, domain.bounds()[a].hi);
    }
  }
  return out;
}

IntensityProbe probe_intensity(const IntensityModel& model, const Domain& domain,
                               const FeatureMap& feature_map) {
  const int d = domain.dim();
  const auto m = static_cast<std::size_t>(std::ceil(std::pow(1e4, 1.0 / d) - 1e-9));
  const Locations nodes = lattice_centers(domain, m);
  const double cell = domain.area() / static_cast<double>(nodes.rows());
  IntensityProbe probe;
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    const double lam = model.intensity(feature_map(nodes.row(i).transpose()));
    if (!std::isfinite(lam) || lam < 0.0) {
      throw ModelInvalid("intensity is not finite at probe node " +
                         std::to_string(i));
    }
    probe.total += lam * cell;
    probe.max = std::max(probe.max, lam);
  }
  return probe;
}

Locations simulate_ipp(const IntensityModel& model, const Domain& domain,
                       const FeatureMap& feature_map, std::uint64_t seed) {
  const IntensityProbe probe = probe_intensity(model, domain, feature_map);
  if (!std::isfinite(probe.total)) {
    throw ModelInvalid("Lambda(D) is not finite");
  }
  const double envelope = 1.2 * probe.max;
  Rng rng(seed);
  const auto count = rng.poisson(probe.total);
  const int d = domain.dim();
  Locations out(static_cast<Eigen::Index>(count), d);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (;;) {
      for (int a = 0; a < d; ++a) {
        z(a) = rng.uniform(domain.bounds()[a].lo, domain.bounds()[a].hi);
      }
      const double lam = model.intensity(feature_map(z));
      if (!std::isfinite(lam)) {
        throw ModelInvalid("intensity is not finite at a sampled location");
      }
      if (lam > envelope) {
        throw ModelInvalid("intensity exceeds the rejection envelope");
      }
      if (rng.uniform() * envelope < lam) break;
    }
    out.row(i) = z.transpose();
  }
  return out;
}

Locations thin_process(const Locations& points, const ThinningModel& model,
                       const FeatureMap& feature_map, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Index> kept;
  kept.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const double s =
        model.detection_probability(feature_map(points.row(i).transpose()));
    // Always draw so the stream position does not depend on s.
    if (rng.uniform() < s) kept.push_back(i);
  }
  Locations out(static_cast<Eigen::Index>(kept.size()), points.cols());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.row(static_cast<Eigen::Index>(k)) = points.row(kept[k]);
  }
  return out;
}

// ---------------------------------------------------------------- dataset

Dataset::Dataset(Eigen::MatrixXd presence, Eigen::MatrixXd background,
                 double domain_area, std::optional<Eigen::VectorXd> quad_weights)
    : n1_(presence.rows()),
      n0_(background.rows()),
      area_(domain_area),
      explicit_weights_(quad_weights.has_value()) {
  if (n1_ < 1) throw InvalidArgument("Dataset: need at least one presence row");
  if (n0_ < 1) throw InvalidArgument("Dataset: need at least one background row");
  if (presence.cols() != background.cols()) {
    throw InvalidArgument("Dataset: presence and background differ in dimension");
  }
  if (!(domain_area > 0.0) || !std::isfinite(domain_area)) {
    throw InvalidArgument("Dataset: domain_area must be positive and finite");
  }
  if (!presence.allFinite() || !background.allFinite()) {
    throw InvalidArgument("Dataset: non-finite feature value");
  }
  features_.resize(n1_ + n0_, presence.cols());
  features_.topRows(n1_) = presence;
  features_.bottomRows(n0_) = background;
  if (quad_weights) {
    if (quad_weights->size() != n0_) {
      throw InvalidArgument("Dataset: quad_weights must have length n0");
    }
    if (!(quad_weights->array() > 0.0).all() || !quad_weights->allFinite()) {
      throw InvalidArgument("Dataset: quad_weights must be positive");
    }
    const double total = quad_weights->sum();
    if (std::abs(total - domain_area) > 1e-9 * domain_area) {
      throw InvalidArgument("Dataset: quad_weights sum " +
                            std::to_string(total) + " != domain_area " +
                            std::to_string(domain_area));
    }
    weights_ = std::move(*quad_weights);
  } else {
    weights_ = Eigen::VectorXd::Constant(n0_, domain_area / static_cast<double>(n0_));
  }
}

Eigen::VectorXd Dataset::labels() const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(rows());
  y.head(n1_).setOnes();
  return y;
}

Dataset assemble_dataset(const Locations& presence, const Locations& background,
                         const FeatureMap& feature_map, double domain_area,
                         std::optional<Eigen::VectorXd> quad_weights) {
  if (presence.rows() == 0) {
    throw InvalidArgument("assemble_dataset: empty presence list");
  }
  if (background.rows() == 0) {
    throw InvalidArgument("assemble_dataset: empty background list");
  }
  return Dataset(apply_features(feature_map, presence),
                 apply_features(feature_map, background), domain_area,
                 std::move(quad_weights));
}

}  // namespace ponly
