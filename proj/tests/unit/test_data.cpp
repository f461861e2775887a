#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "ponly/data.hpp"
#include "ponly/errors.hpp"
#include "ponly/rng.hpp"

using namespace ponly;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    (void)c();
  }
  CHECK(Rng(42)() != Rng(43)());
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

TEST_CASE("rng distributions") {
  Rng rng(7);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));

  for (double mean : {0.5, 7.0, 29.0, 31.0, 500.0}) {
    const int reps = 20000;
    double s = 0;
    for (int i = 0; i < reps; ++i) s += static_cast<double>(rng.poisson(mean));
    CHECK(std::abs(s / reps - mean) < 4 * std::sqrt(mean / reps));
  }
  CHECK(rng.poisson(0.0) == 0);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("domain") {
  CHECK(Domain::interval(0, 2).area() == 2.0);
  CHECK(Domain({{0, 2}, {1, 4}}).area() == 6.0);
  CHECK_THROWS_AS(Domain({{1, 1}}), InvalidArgument);
  CHECK_THROWS_AS(Domain({}), InvalidArgument);
  CHECK(Domain::unit(2).contains(Eigen::Vector2d(0.5, 1.0)));
  CHECK_FALSE(Domain::unit(2).contains(Eigen::Vector2d(0.5, 1.1)));
}

TEST_CASE("grid background") {
  const Locations g1 = sample_background(Domain::unit(1), 4, BackgroundMode::grid, 0);
  REQUIRE(g1.rows() == 4);
  const double expect1[] = {0.125, 0.375, 0.625, 0.875};
  for (int i = 0; i < 4; ++i) CHECK(g1(i, 0) == doctest::Approx(expect1[i]).epsilon(1e-15));

  const Locations g2 = sample_background(Domain::unit(2), 9, BackgroundMode::grid, 0);
  REQUIRE(g2.rows() == 9);
  const double c[] = {1.0 / 6, 0.5, 5.0 / 6};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      CHECK(g2(3 * i + j, 0) == doctest::Approx(c[i]).epsilon(1e-15));
      CHECK(g2(3 * i + j, 1) == doctest::Approx(c[j]).epsilon(1e-15));
    }
  }

  CHECK_THROWS_AS(sample_background(Domain::unit(2), 10, BackgroundMode::grid, 0), InvalidArgument);
  CHECK_THROWS_AS(sample_background(Domain::unit(1), 0, BackgroundMode::uniform, 0), InvalidArgument);
  CHECK(grid_side(1000, 3) == 10);
  CHECK_THROWS_AS(grid_side(1001, 3), InvalidArgument);
}

TEST_CASE("grid cells partition the domain") {
  const Domain d({{-1.0, 3.0}, {2.0, 2.5}});
  const std::size_t m = 7;
  const Locations g = sample_background(d, m * m, BackgroundMode::grid, 0);
  const double hx = 4.0 / m, hy = 0.5 / m;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    CHECK(d.contains(g.row(i).transpose()));
    // each center is the midpoint of its own cell
    const double kx = (g(i, 0) - (-1.0)) / hx - 0.5;
    const double ky = (g(i, 1) - 2.0) / hy - 0.5;
    CHECK(std::abs(kx - std::round(kx)) < 1e-9);
    CHECK(std::abs(ky - std::round(ky)) < 1e-9);
  }
  CHECK(static_cast<double>(g.rows()) * hx * hy == doctest::Approx(d.area()).epsilon(1e-12));
}

TEST_CASE("uniform background") {
  const Locations u = sample_background(Domain::unit(1), 100000, BackgroundMode::uniform, 3);
  CHECK(std::abs(u.col(0).mean() - 0.5) < 0.005);
  const Domain d({{2, 3}, {-1, 1}});
  const Locations v = sample_background(d, 1000, BackgroundMode::uniform, 3);
  for (Eigen::Index i = 0; i < v.rows(); ++i) CHECK(d.contains(v.row(i).transpose()));
  CHECK(v == sample_background(d, 1000, BackgroundMode::uniform, 3));
}

TEST_CASE("intensity model") {
  const auto m = IntensityModel::log_linear(0.5, Eigen::Vector2d(1.0, -2.0));
  CHECK(m.kind() == IntensityModel::Kind::log_linear);
  CHECK(m.intensity(Eigen::Vector2d(1.0, 1.0)) == doctest::Approx(std::exp(-0.5)));
  const IntensityModel mix({{std::log(0.95), 0.0, VectorXd::Constant(1, 1.5)},
                            {std::log(0.05), 0.0, VectorXd::Constant(1, -2.0)}});
  CHECK(mix.kind() == IntensityModel::Kind::mixture);
  const double x = 0.7;
  CHECK(mix.intensity(VectorXd::Constant(1, x)) ==
        doctest::Approx(0.95 * std::exp(1.5 * x) + 0.05 * std::exp(-2.0 * x)));
  CHECK_THROWS_AS(IntensityModel({}), InvalidArgument);
  CHECK_THROWS_AS(m.intensity(VectorXd::Zero(3)), InvalidArgument);
}

TEST_CASE("probe integral of exp(x) on [0,1]") {
  const auto probe = probe_intensity(IntensityModel::log_linear(0.0, VectorXd::Constant(1, 1.0)),
                                     Domain::unit(1), identity_features());
  CHECK(probe.total == doctest::Approx(std::numbers::e - 1.0).epsilon(1e-8));
  CHECK(probe.max == doctest::Approx(std::numbers::e).epsilon(1e-3));
}

TEST_CASE("simulate_ipp count is Poisson with mean Lambda(D)") {
  const int reps = 2000;
  SUBCASE("homogeneous") {
    const double c = 5.0;
    const auto m = IntensityModel::log_linear(std::log(c), VectorXd::Zero(1));
    double total = 0;
    for (int r = 0; r < reps; ++r) {
      total += static_cast<double>(simulate_ipp(m, Domain::unit(1), identity_features(),
                                                derive_seed(11, r)).rows());
    }
    CHECK(std::abs(total / reps - c) <= 4 * std::sqrt(c / reps));
  }
  SUBCASE("log-linear") {
    const auto m = IntensityModel::log_linear(0.0, VectorXd::Constant(1, 1.0));
    const double lambda = std::numbers::e - 1.0;
    double total = 0, xsum = 0;
    for (int r = 0; r < reps; ++r) {
      const Locations pts = simulate_ipp(m, Domain::unit(1), identity_features(), derive_seed(12, r));
      total += static_cast<double>(pts.rows());
      xsum += pts.sum();
      for (Eigen::Index i = 0; i < pts.rows(); ++i) REQUIRE(Domain::unit(1).contains(pts.row(i).transpose()));
    }
    CHECK(std::abs(total / reps - lambda) <= 4 * std::sqrt(lambda / reps));
    // density e^x / (e - 1) has mean 1 / (e - 1)
    CHECK(std::abs(xsum / total - 1.0 / (std::numbers::e - 1.0)) < 4 * 0.29 / std::sqrt(total));
  }
}

TEST_CASE("simulate_ipp with the mixture intensity recovers mu1") {
  // Over a Gaussian background, lambda(x) proportional to p1(x) / p0(x); with
  // features (x, x^2) and a uniform domain the presence density is p1.
  const double pi[] = {0.95, 0.05}, b[] = {1.5, -2.0};
  std::vector<IntensityComponent> comps;
  for (int k = 0; k < 2; ++k) {
    comps.push_back({std::log(pi[k]), std::log(2000.0) - 0.5 * b[k] * b[k] - 0.5 * std::log(2 * std::numbers::pi),
                     Eigen::Vector2d(b[k], -0.5)});
  }
  const FeatureMap quad = [](const VectorXd& z) { return Eigen::Vector2d(z(0), z(0) * z(0)).eval(); };
  const Locations pts = simulate_ipp(IntensityModel(comps), Domain::interval(-8, 8), quad, 99);
  const double n = static_cast<double>(pts.rows());
  CHECK(std::abs(n - 2000.0) < 4 * std::sqrt(2000.0));
  const double var = 1.0 + 0.95 * 0.05 * 3.5 * 3.5;
  CHECK(std::abs(pts.col(0).mean() - 1.325) < 4 * std::sqrt(var / n));
}

TEST_CASE("simulate_ipp rejects non-finite intensities") {
  const auto m = IntensityModel::log_linear(0.0, VectorXd::Constant(1, 1.0));
  const FeatureMap bad = [](const VectorXd& z) {
    return VectorXd::Constant(1, z(0) > 0.5 ? std::numeric_limits<double>::infinity() : 0.0);
  };
  CHECK_THROWS_AS(simulate_ipp(m, Domain::unit(1), bad, 1), ModelInvalid);
}

TEST_CASE("thinning") {
  const Locations pts = sample_background(Domain::unit(2), 100000, BackgroundMode::uniform, 5);
  SUBCASE("s = 1 is the identity") {
    CHECK(thin_process(pts, ThinningModel::constant(1.0), identity_features(), 6) == pts);
  }
  SUBCASE("s = 0.5 keeps half, in order") {
    const Locations kept = thin_process(pts, ThinningModel::constant(0.5), identity_features(), 6);
    CHECK(std::abs(static_cast<double>(kept.rows()) - 50000.0) <= 4 * std::sqrt(25000.0));
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < pts.rows() && j < kept.rows(); ++i) {
      if (pts.row(i) == kept.row(j)) ++j;
    }
    CHECK(j == kept.rows());
  }
  SUBCASE("detection probability above one is rejected") {
    const ThinningModel up(0.5, VectorXd::Constant(1, 0.1), {1},
                           IntensityModel::log_linear(0.0, VectorXd::Constant(1, 1.0)), {0});
    CHECK_THROWS_AS(thin_process(pts, up, identity_features(), 1), ModelInvalid);
  }
  SUBCASE("feature sets must be disjoint") {
    CHECK_THROWS_AS(ThinningModel(-0.5, VectorXd::Constant(1, 0.3), {0},
                                  IntensityModel::log_linear(0.0, VectorXd::Constant(1, 1.0)), {0}),
                    InvalidArgument);
  }
  SUBCASE("sightings model adds gamma and delta") {
    const ThinningModel t(-0.5, VectorXd::Constant(1, 0.3), {1},
                          IntensityModel::log_linear(2.0, VectorXd::Constant(1, 1.0)), {0});
    const IntensityModel s = t.sightings_on(2);
    CHECK(s.components()[0].alpha == doctest::Approx(1.5));
    CHECK(s.components()[0].beta(0) == 1.0);
    CHECK(s.components()[0].beta(1) == 0.3);
    const Eigen::Vector2d x(0.2, 0.7);
    CHECK(s.intensity(x) ==
          doctest::Approx(t.occurrence_on(2).intensity(x) * t.detection_probability(x)));
  }
}

TEST_CASE("assemble_dataset") {
  MatrixXd pres(2, 1), bg(3, 1);
  pres << 0.1, 0.2;
  bg << 0.3, 0.4, 0.5;
  const Dataset d = assemble_dataset(pres, bg, identity_features(), 1.0);
  CHECK(d.n1() == 2);
  CHECK(d.n0() == 3);
  CHECK(d.features()(0, 0) == 0.1);
  CHECK(d.features()(4, 0) == 0.5);
  CHECK(d.label(1) == 1);
  CHECK(d.label(2) == 0);

  MatrixXd bg4(4, 1);
  bg4 << 0, 1, 2, 3;
  const Dataset w = assemble_dataset(pres, bg4, identity_features(), 2.0);
  CHECK(w.weights().isApproxToConstant(0.5));
  CHECK_FALSE(w.has_explicit_weights());

  CHECK_THROWS_AS(assemble_dataset(pres, bg4, identity_features(), 2.0, VectorXd::Constant(4, 1.0)),
                  InvalidArgument);
  CHECK_NOTHROW(assemble_dataset(pres, bg4, identity_features(), 2.0, Eigen::Vector4d(0.2, 0.3, 0.5, 1.0)));
  CHECK_THROWS_AS(assemble_dataset(MatrixXd(0, 1), bg, identity_features(), 1.0), InvalidArgument);
  CHECK_THROWS_AS(assemble_dataset(pres, MatrixXd(0, 1), identity_features(), 1.0), InvalidArgument);
  CHECK_THROWS_AS(Dataset(pres, MatrixXd::Zero(3, 2), 1.0), InvalidArgument);
  CHECK_THROWS_AS(Dataset(pres, bg, 0.0), InvalidArgument);
}
