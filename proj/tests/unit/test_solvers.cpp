#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ponly/errors.hpp"
#include "ponly/likelihoods.hpp"
#include "ponly/simstudy.hpp"
#include "ponly/solvers.hpp"

using namespace ponly;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SmoothObjective scalar(std::function<double(double)> f, std::function<double(double)> df,
                       std::function<double(double)> d2f) {
  SmoothObjective obj;
  obj.evaluate = [=](const VectorXd& x) {
    ObjectiveEval e;
    e.value = f(x(0));
    e.gradient = VectorXd::Constant(1, df(x(0)));
    e.hessian = MatrixXd::Constant(1, 1, d2f(x(0)));
    return e;
  };
  return obj;
}

Dataset symmetric_dataset() {
  MatrixXd pres(1, 1), bg(2, 1);
  pres << 0.0;
  bg << -1.0, 1.0;
  return Dataset(pres, bg, 1.0);
}

}  // namespace

TEST_CASE("newton on a quadratic") {
  const auto obj = scalar([](double x) { return -(x - 3) * (x - 3); },
                          [](double x) { return -2 * (x - 3); }, [](double) { return -2.0; });
  const NewtonResult r = newton_solve(obj, VectorXd::Zero(1), Penalty::none(), {});
  CHECK(r.params(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(r.iterations <= 2);
  CHECK(r.converged);

  // slope at 0 is 6: a threshold above it pins x at 0, below it shrinks
  const NewtonResult z = newton_solve(obj, VectorXd::Zero(1), Penalty::l1(7.0), {});
  CHECK(z.params(0) == 0.0);
  const NewtonResult s = newton_solve(obj, VectorXd::Constant(1, -5.0), Penalty::l1(2.0), {});
  CHECK(s.params(0) == doctest::Approx(2.0).epsilon(1e-12));
  const NewtonResult q = newton_solve(obj, VectorXd::Zero(1), Penalty::l2(2.0), {});
  CHECK(q.params(0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("newton matches bisection on random concave scalars") {
  Rng rng(11);
  for (int k = 0; k < 25; ++k) {
    const double a = rng.uniform(0.5, 3), b = rng.uniform(0.2, 2), c = rng.uniform(0, 1);
    const double lam = rng.uniform(0, 0.5);
    auto f = [=](double x) { return a * x - b * std::exp(0.5 * x) - c * x * x; };
    auto df = [=](double x) { return a - 0.5 * b * std::exp(0.5 * x) - 2 * c * x; };
    auto d2f = [=](double x) { return -0.25 * b * std::exp(0.5 * x) - 2 * c; };
    for (const Penalty& pen : {Penalty::none(), Penalty::l1(lam), Penalty::l2(lam)}) {
      const NewtonResult r = newton_solve(scalar(f, df, d2f), VectorXd::Zero(1), pen, {});
      // bisection on the monotone (sub)gradient
      const double l1 = pen.kind == Penalty::Kind::l1 ? lam : 0.0;
      const double l2 = pen.kind == Penalty::Kind::l2 ? lam : 0.0;
      auto score = [&](double x) { return df(x) - l2 * x - l1 * (x > 0 ? 1.0 : -1.0); };
      double ref = 0.0;
      if (std::abs(df(0.0)) > l1) {
        double lo = df(0.0) > 0 ? 0.0 : -30.0, hi = df(0.0) > 0 ? 30.0 : 0.0;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          (score(mid) > 0 ? lo : hi) = mid;
        }
        ref = 0.5 * (lo + hi);
      }
      const double curvature = std::abs(d2f(ref)) + l2;
      CHECK(std::abs(r.params(0) - ref) <= 2 * OptimOptions{}.grad_tol / curvature + 1e-14);
    }
  }
}

TEST_CASE("newton reports iteration exhaustion") {
  const auto obj = scalar([](double x) { return x - std::exp(x); },
                          [](double x) { return 1 - std::exp(x); }, [](double x) { return -std::exp(x); });
  OptimOptions opts;
  opts.max_iter = 1;
  CHECK_THROWS_AS(newton_solve(obj, VectorXd::Constant(1, 5.0), Penalty::none(), opts), NonConvergence);
}

TEST_CASE("penalty and options validation") {
  CHECK_THROWS_AS(Penalty::l1(-1.0).validate(2), InvalidArgument);
  CHECK_THROWS_AS(Penalty::elastic(1.0, 1.5).validate(2), InvalidArgument);
  Penalty w = Penalty::l2(1.0);
  w.weights = VectorXd::Ones(3);
  CHECK_THROWS_AS(w.validate(2), InvalidArgument);
  w.weights = Eigen::Vector2d(1.0, -1.0);
  CHECK_THROWS_AS(w.validate(2), InvalidArgument);
  CHECK(Penalty::elastic(2.0, 0.25).value(Eigen::Vector2d(1.0, -2.0)) ==
        doctest::Approx(2.0 * (0.25 * 3.0 + 0.75 * 0.5 * 5.0)));
  CHECK(penalty_kind_from_string("elastic") == Penalty::Kind::elastic);
  CHECK_THROWS_AS(penalty_kind_from_string("ridge"), InvalidArgument);
  OptimOptions bad;
  bad.grad_tol = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(fit_logistic(symmetric_dataset(), 0.5), InvalidArgument);
}

TEST_CASE("symmetric moment condition") {
  const Dataset d = symmetric_dataset();
  const ModelFit ipp = fit_ipp(d);
  CHECK(std::abs(ipp.beta(0)) < 1e-12);
  CHECK(std::abs(*ipp.alpha) < 1e-12);
  const ModelFit me = fit_maxent(d);
  CHECK(std::abs(me.beta(0)) < 1e-12);
  CHECK(std::abs(*me.alpha) < 1e-12);
  const ModelFit iw = fit_iwlr(d);
  CHECK(std::abs(iw.beta(0)) < 1e-12);
  CHECK(*iw.alpha == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
}

TEST_CASE("ipp matches a golden-section maxent oracle") {
  Rng rng(21);
  for (int k = 0; k < 10; ++k) {
    MatrixXd pres(2, 1), bg(3, 1);
    for (int i = 0; i < 3; ++i) bg(i, 0) = rng.uniform(-2, 2);
    const double lo = bg.minCoeff(), hi = bg.maxCoeff();
    for (int i = 0; i < 2; ++i) pres(i, 0) = rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo));
    const Dataset d(pres, bg, rng.uniform(0.5, 3));
    const double ref = oracle::golden_max(
        [&](double b) { return maxent_loglik(VectorXd::Constant(1, b), d).value; }, -60, 60, 1e-13);
    CHECK(fit_ipp(d).beta(0) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("fit invariants") {
  const Dataset d = oracle::random_dataset(31, 80, 400, 3, 2.5);
  const ModelFit ipp = fit_ipp(d);
  CHECK(ipp.converged);
  CHECK(ipp.grad_norm <= OptimOptions{}.grad_tol);
  CHECK(ipp.fitted.size() == d.rows());
  const double total = (d.weights().array() * ipp.fitted.tail(d.n0()).array()).sum();
  CHECK(total == doctest::Approx(static_cast<double>(d.n1())).epsilon(1e-10));

  for (const Penalty& pen : {Penalty::none(), Penalty::l2(0.5), Penalty::l1(0.2), Penalty::elastic(0.3, 0.5)}) {
    CAPTURE(pen.describe());
    const ModelFit a = fit_ipp(d, pen), b = fit_maxent(d, pen);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() <= 1e-8);
    const VectorXd u = (d.background() * b.beta).array() + *b.alpha;
    CHECK((d.weights().array() * u.array().exp()).sum() ==
          doctest::Approx(static_cast<double>(d.n1())).epsilon(1e-12));
  }

  const ModelFit sparse = fit_ipp(d, Penalty::l1(1e4));
  CHECK(sparse.beta.isZero(0.0));
}

TEST_CASE("scale equivariance") {
  const Dataset d = oracle::random_dataset(41, 60, 300, 3, 1.3);
  const ModelFit base = fit_ipp(d);
  for (double c : {0.01, 3.0, 250.0}) {
    MatrixXd pres = d.presence(), bg = d.background();
    pres.col(1) *= c;
    bg.col(1) *= c;
    const Dataset scaled(pres, bg, d.domain_area());
    const ModelFit fit = fit_ipp(scaled);
    CHECK(fit.beta(1) * c == doctest::Approx(base.beta(1)).epsilon(1e-8));
    CHECK(fit.beta(0) == doctest::Approx(base.beta(0)).epsilon(1e-8));
    CHECK(*fit.alpha == doctest::Approx(*base.alpha).epsilon(1e-8));
    CHECK(oracle::rel_err(fit.fitted, base.fitted) <= 1e-8);
  }
}

TEST_CASE("divergence and rank deficiency") {
  MatrixXd pres(2, 1), bg(3, 1);
  pres << 5.0, 6.0;
  bg << 0.0, 1.0, 2.0;
  try {
    fit_ipp(Dataset(pres, bg, 1.0));
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& ex) {
    CHECK(ex.direction().size() == 1);
    CHECK(ex.direction()(0) > 0.0);
  }
  CHECK_THROWS_AS(fit_logistic(Dataset(pres, bg, 1.0), 1.0), NonConvergence);

  const Dataset d = oracle::random_dataset(51, 20, 50, 2);
  MatrixXd p2(20, 3), b2(50, 3);
  p2 << d.presence(), d.presence().col(0) - 2.0 * d.presence().col(1);
  b2 << d.background(), d.background().col(0) - 2.0 * d.background().col(1);
  try {
    fit_ipp(Dataset(p2, b2, 1.0));
    FAIL("expected RankDeficiency");
  } catch (const RankDeficiency& ex) {
    const VectorXd v = ex.direction();
    CHECK(v.size() == 4);
  }
  // the ridge makes the same problem well posed
  CHECK_NOTHROW(fit_ipp(Dataset(p2, b2, 1.0), Penalty::l2(0.1)));

  MatrixXd flat = MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(fit_ipp(Dataset(MatrixXd::Ones(1, 1), flat, 1.0)), RankDeficiency);
}

TEST_CASE("logistic fits") {
  SUBCASE("label-swap symmetry gives eta = 0") {
    MatrixXd pres(3, 1), bg(3, 1);
    pres << 0.7, 0.7, -0.7;
    bg << -0.7, -0.7, 0.7;
    const ModelFit f = fit_logistic(Dataset(pres, bg, 1.0), 1.0);
    CHECK(std::abs(*f.eta) < 1e-12);
    CHECK(f.beta(0) == doctest::Approx(std::log(2.0) / 0.7).epsilon(1e-10));
    CHECK(*f.alpha == doctest::Approx(*f.eta + std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("correct specification: slope is the mean shift for any ratio") {
    const Dataset d = draw_study_data(MixtureSpec1D::single(1.325), 3000, 3000, 61);
    const ModelFit f = fit_logistic(d, 1.0);
    const double se = std::sqrt(f.information.inverse()(1, 1));
    CHECK(std::abs(f.beta(0) - 1.325) < 4 * se);
  }
  SUBCASE("misspecified mixture at n1 = n0") {
    const Dataset d = draw_study_data(MixtureSpec1D{}, 3000, 3000, 62);
    const ModelFit f = fit_logistic(d, 1.0);
    const double se = std::sqrt(f.information.inverse()(1, 1));
    CHECK(std::abs(f.beta(0) - 1.04) < 0.06 + 2 * se);
    CHECK(std::abs(f.beta(0) - population_lr_limit(MixtureSpec1D{}, 1.0).beta) < 4 * se);
  }
}

TEST_CASE("iwlr") {
  const Dataset d = oracle::random_dataset(71, 120, 900, 3, 2.0);
  const ModelFit ipp = fit_ipp(d);
  const ModelFit iw = fit_iwlr(d);
  CHECK((iw.beta - ipp.beta).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(std::abs(*iw.alpha - *ipp.alpha) <= 1e-6);
  CHECK(*iw.alpha == doctest::Approx(*iw.eta + std::log(*iw.W * 900 / 2.0)).epsilon(1e-14));
  CHECK(iw.escalation_rounds <= 2);
  CHECK(iw.stability_refits >= 1);
  CHECK(iw.last_W_change <= OptimOptions{}.W_change_tol);
  CHECK(iw.max_fitted <= OptimOptions{}.W_target_slack * OptimOptions{}.W_target_maxfit);

  const ModelFit small = fit_logistic(d, 10.0);
  CHECK((small.beta - ipp.beta).cwiseAbs().maxCoeff() > 1e-6);

  OptimOptions tight;
  tight.W_initial = 1.0;
  tight.W_max_escalations = 0;
  CHECK_THROWS_AS(fit_iwlr(d, {}, tight), NonConvergence);
}

TEST_CASE("poisson llm") {
  SUBCASE("coincident features reproduce ipp") {
    const Dataset base = oracle::random_dataset(81, 1, 200, 2);
    MatrixXd pres(40, 2);
    Rng rng(82);
    for (int i = 0; i < 40; ++i) pres.row(i) = base.background().row(static_cast<Eigen::Index>(rng.below(100)));
    const Dataset d(pres, base.background(), 1.5);
    const ModelFit a = fit_poisson_llm(bin_presence_by_features(d), d.background());
    const ModelFit b = fit_ipp(d);
    CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(*a.alpha - *b.alpha) <= 1e-10);
  }
  SUBCASE("a single cell is unidentifiable") {
    BinnedCounts b;
    b.counts = {3};
    b.cell_of_presence = {0, 0, 0};
    b.cell_area = 1.0;
    CHECK_THROWS_AS(fit_poisson_llm(b, MatrixXd::Constant(1, 1, 0.5)), RankDeficiency);
  }
  SUBCASE("grid refinement approaches ipp") {
    const Domain dom = Domain::unit(1);
    const Locations pres = simulate_ipp(IntensityModel::log_linear(std::log(400.0), VectorXd::Constant(1, 1.5)),
                                        dom, identity_features(), 83);
    const Locations fine = sample_background(dom, 100000, BackgroundMode::grid, 0);
    const double ref = fit_ipp(assemble_dataset(pres, fine, identity_features(), 1.0)).beta(0);
    double last = 1e9;
    for (std::size_t cells : {10, 100, 1000, 10000}) {
      const Locations grid = sample_background(dom, cells, BackgroundMode::grid, 0);
      const double b = fit_poisson_llm(bin_presence(pres, grid, dom), grid).beta(0);
      const double same = fit_ipp(assemble_dataset(pres, grid, identity_features(), 1.0)).beta(0);
      // binning moves each presence by at most half a cell
      CHECK(std::abs(b - same) <= 1.0 / static_cast<double>(cells));
      last = std::abs(b - ref);
    }
    CHECK(last < 1e-3);
  }
}

TEST_CASE("mixture study ipp slope") {
  const Dataset d = draw_study_data(MixtureSpec1D{}, 3000, 100000, 91);
  const ModelFit f = fit_ipp(d);
  // slope is the presence mean over a unit-variance background, up to
  // background noise
  CHECK(std::abs(f.beta(0) - 1.325) < 4 * std::sqrt(1.58 / 3000 + 0.0002));
}
