#include "wbo/design.hpp"
#include "wbo/gp.hpp"
#include "wbo/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

namespace {

using wbo::GPHyperparams;

Eigen::MatrixXd col(std::initializer_list<double> v) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

TEST(Matern32, ClosedFormValues) {
  const auto h = GPHyperparams::isotropic(1.0, 1.0);
  Eigen::RowVectorXd a(1), b(1);
  a << 0.0;
  b << 1.0;
  // (1 + sqrt 3) exp(-sqrt 3), 30-digit reference
  EXPECT_NEAR(wbo::matern32(a, b, h), 0.483357724596507650595, 1e-15);
  const auto h2 = GPHyperparams::isotropic(0.3, 2.5);
  EXPECT_DOUBLE_EQ(wbo::matern32(a, a, h2), 2.5);
  double prev = 2.5;
  for (double r = 0.05; r < 10.0; r += 0.05) {
    b << r;
    const double v = wbo::matern32(a, b, h2);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 1e-20);
}

TEST(Lml, SinglePointWithZeroResidual) {
  const auto h = GPHyperparams::isotropic(0.4, 3.0, 1.7);
  const double v = wbo::log_marginal_likelihood(h, col({0.2}), Eigen::VectorXd::Constant(1, 1.7));
  EXPECT_NEAR(v, -0.5 * std::log(3.0) - 0.5 * std::log(2.0 * M_PI), 1e-14);
}

TEST(Lml, ResidualShiftInvariance) {
  const auto X = col({0.05, 0.3, 0.55, 0.8, 0.95});
  Eigen::VectorXd Y(5);
  Y << 1.0, -0.3, 0.7, 2.2, 0.1;
  auto h = GPHyperparams::isotropic(0.25, 1.5, 0.4);
  const double base = wbo::log_marginal_likelihood(h, X, Y);
  h.mean_const += 123.0;
  EXPECT_NEAR(wbo::log_marginal_likelihood(h, X, (Y.array() + 123.0).matrix()), base, 1e-9);
}

double central_difference(const GPHyperparams& h, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& Y, int k) {
  const double step = 1e-5;
  auto shifted = [&](double s) {
    GPHyperparams g = h;
    const auto n_ls = g.lengthscales.size();
    if (k < n_ls)
      g.lengthscales[k] = std::exp(std::log(g.lengthscales[k]) + s);
    else if (k == n_ls)
      g.signal_variance = std::exp(std::log(g.signal_variance) + s);
    else
      g.mean_const += s;
    return wbo::log_marginal_likelihood(g, X, Y);
  };
  return (shifted(step) - shifted(-step)) / (2.0 * step);
}

TEST(Lml, GradientMatchesFiniteDifferences) {
  wbo::Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 2;
    const int n = 4 + static_cast<int>(rng.below(6));
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < d; ++k) X(i, k) = rng.uniform();
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) Y[i] = std::sin(6.0 * X(i, 0)) + rng.uniform();
    GPHyperparams h = GPHyperparams::isotropic(std::exp(rng.uniform(-3.0, 0.0)),
                                               std::exp(rng.uniform(-2.0, 2.0)),
                                               rng.uniform(-1.0, 1.0));
    if (trial % 3 == 0 && d == 2) h.lengthscales = Eigen::Vector2d(0.2, 0.6);
    const auto ev = wbo::log_marginal_likelihood_with_gradient(h, X, Y);
    ASSERT_EQ(ev.nugget, 0.0);
    Eigen::VectorXd fd(ev.gradient.size());
    for (int k = 0; k < fd.size(); ++k) fd[k] = central_difference(h, X, Y, k);
    const double rel = (ev.gradient - fd).lpNorm<Eigen::Infinity>() /
                       std::max(fd.lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE(rel, 1e-5) << "trial " << trial;
  }
}

TEST(GPModel, InterpolatesAndFactorizes) {
  const auto& p = wbo::find_problem("forrester");
  const auto d = wbo::generate_design(p, wbo::DesignType::lhs, 12, 5, 0.05);
  const auto model = wbo::fit_mle(d.X, d.Y);
  ASSERT_EQ(model.hyperparams().nugget, 0.0);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const auto pr = model.predict(d.X.row(i));
    EXPECT_NEAR(pr.mean, d.Y[i], 1e-6);
    EXPECT_LE(pr.sd, 1e-4);
  }
  Eigen::MatrixXd K = wbo::kernel_matrix(d.X, d.X, model.hyperparams());
  const Eigen::MatrixXd LLt = model.chol() * model.chol().transpose();
  EXPECT_LE((LLt - K).norm() / K.norm(), 1e-8);
}

TEST(GPModel, RevertsToPriorFarFromData) {
  const auto h = GPHyperparams::isotropic(0.01, 4.0, -2.0);
  Eigen::VectorXd Y(3);
  Y << 1.0, 3.0, 0.5;
  const wbo::GPModel model(h, col({0.0, 0.1, 0.2}), Y);
  Eigen::RowVectorXd far(1);
  far << 0.9;
  const auto pr = model.predict(far);
  EXPECT_NEAR(pr.mean, -2.0, 1e-3);
  EXPECT_NEAR(pr.sd, 2.0, 1e-3);
}

TEST(GPModel, PosteriorSdBoundedByPrior) {
  const auto& p = wbo::find_problem("himmelblau");
  const auto d = wbo::generate_design(p, wbo::DesignType::lhs_near_opt, 20, 4, 0.07);
  const auto model = wbo::fit_mle(d.X, d.Y);
  const auto grid = wbo::make_grid(2, 40);
  const auto batch = model.predict_batch(grid.points);
  const double prior_sd = std::sqrt(model.hyperparams().signal_variance);
  EXPECT_GE(batch.sd.minCoeff(), 0.0);
  EXPECT_LE(batch.sd.maxCoeff(), prior_sd + 1e-9);
}

TEST(GPModel, NestedDesignsDoNotIncreaseVariance) {
  wbo::Rng rng(6);
  Eigen::MatrixXd X(12, 2);
  for (int i = 0; i < 12; ++i) X.row(i) << rng.uniform(), rng.uniform();
  const Eigen::VectorXd Y = X.col(0).array().sin() + X.col(1).array().square();
  const auto h = GPHyperparams::isotropic(0.3, 1.2, 0.1);
  const auto grid = wbo::make_grid(2, 15);
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(grid.size(), 1e300);
  for (int n = 1; n <= 12; ++n) {
    const wbo::GPModel m(h, X.topRows(n), Y.head(n));
    const Eigen::VectorXd var = m.predict_batch(grid.points).sd.array().square();
    EXPECT_LE((var - prev).maxCoeff(), 1e-8) << "n = " << n;
    prev = var;
  }
}

TEST(FitMle, ConstantObservations) {
  const auto X = col({0.1, 0.35, 0.6, 0.9});
  const Eigen::VectorXd Y = Eigen::VectorXd::Constant(4, 2.75);
  const auto model = wbo::fit_mle(X, Y);
  EXPECT_NEAR(model.hyperparams().mean_const, 2.75, 1e-9);
  const auto grid = wbo::make_grid(1, 101);
  const auto batch = model.predict_batch(grid.points);
  EXPECT_LE((batch.mean.array() - 2.75).abs().maxCoeff(), 1e-6);
}

TEST(FitMle, ReturnedLikelihoodDominatesStarts) {
  for (const auto& p : wbo::list_problems()) {
    const auto d = wbo::generate_design(p, wbo::DesignType::lhs, 20 * p.dim(), 17, 0.05);
    wbo::FitReport rep;
    const auto model = wbo::fit_mle(d.X, d.Y, {}, &rep);
    ASSERT_EQ(rep.start_lml.size(), 8u);
    const double fitted = wbo::log_marginal_likelihood(model.hyperparams(), d.X, d.Y);
    for (double s : rep.start_lml) EXPECT_GE(fitted, s - 1e-9) << p.name();
    const auto& hp = model.hyperparams();
    EXPECT_GE(hp.lengthscale(), 1e-3);
    EXPECT_LE(hp.lengthscale(), 1e2);
    EXPECT_GE(hp.signal_variance, 1e-6);
    EXPECT_LE(hp.signal_variance, 1e6);
    EXPECT_TRUE(hp.nugget == 0.0 || (hp.nugget >= 1e-10 && hp.nugget <= 1e-4));
  }
}

// Independent oracle: scan 3000 log-spaced lengthscales, put c and sigma_f^2
// at their closed-form optima, and keep the best likelihood.
double dense_scan_lml(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
  double best = -INFINITY;
  for (int i = 0; i < 3000; ++i) {
    const double l = std::exp(std::log(1e-3) + (std::log(1e2) - std::log(1e-3)) * i / 2999.0);
    const auto unit = GPHyperparams::isotropic(l, 1.0);
    const Eigen::MatrixXd R = wbo::kernel_matrix(X, X, unit);
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd w = llt.solve(Eigen::VectorXd::Ones(X.rows()));
    const double c = w.dot(Y) / w.sum();
    const Eigen::VectorXd r = Y.array() - c;
    const double s2 = std::clamp(r.dot(llt.solve(r)) / X.rows(), 1e-6, 1e6);
    try {
      best = std::max(best, wbo::log_marginal_likelihood(GPHyperparams::isotropic(l, s2, c), X, Y));
    } catch (const wbo::FitError&) {
    }
  }
  return best;
}

TEST(FitMle, MatchesDenseLengthscaleScan) {
  for (const auto& p : wbo::list_problems()) {
    for (int n : wbo::default_sizes(p.dim())) {
      const auto d = wbo::generate_design(p, wbo::DesignType::lhs, n, 23, 0.05);
      const auto m = wbo::fit_mle(d.X, d.Y);
      EXPECT_GE(m.log_marginal_likelihood(), dense_scan_lml(d.X, d.Y) - 1e-3)
          << p.name() << " n=" << n;
    }
  }
}

TEST(FitMle, Deterministic) {
  const auto& p = wbo::find_problem("six_hump_camel");
  const auto d = wbo::generate_design(p, wbo::DesignType::lhs, 25, 3, 0.07);
  const auto a = wbo::fit_mle(d.X, d.Y);
  const auto b = wbo::fit_mle(d.X, d.Y);
  EXPECT_EQ(a.state_hash(), b.state_hash());
}

TEST(FitMle, RejectsDuplicatesAndTinyDesigns) {
  EXPECT_THROW(wbo::fit_mle(col({0.2, 0.5, 0.2}), Eigen::Vector3d(1, 2, 3)), wbo::FitError);
  EXPECT_THROW(wbo::fit_mle(col({0.2}), Eigen::VectorXd::Ones(1)), std::invalid_argument);
}

TEST(FitMle, NuggetEscalatesOnlyWhenCholeskyFails) {
  // A repeated input makes the kernel matrix exactly singular.
  const auto h = GPHyperparams::isotropic(10.0, 1.0);
  const auto X = col({0.0, 0.0, 0.5});
  const wbo::GPModel m(h, X, Eigen::Vector3d(0.0, 0.0, 1.0));
  EXPECT_GE(m.hyperparams().nugget, 1e-10);
  EXPECT_LE(m.hyperparams().nugget, 1e-4);

  const wbo::GPModel fine(GPHyperparams::isotropic(0.2, 1.0), col({0.0, 0.5, 1.0}),
                          Eigen::Vector3d(0.0, 1.0, 0.0));
  EXPECT_EQ(fine.hyperparams().nugget, 0.0);
}

TEST(FitMle, NearlyCoincidentInputsStillFit) {
  const auto X = col({0.0, 1e-7, 0.5, 1.0});
  const Eigen::Vector4d Y(0.0, 1e-7, 0.25, 1.0);
  wbo::FitReport rep;
  const auto m = wbo::fit_mle(X, Y, {}, &rep);
  for (double s : rep.start_lml) EXPECT_GE(m.log_marginal_likelihood(), s - 1e-9);
  EXPECT_TRUE(std::isfinite(m.log_marginal_likelihood()));
}

// Statistical self-consistency: sample a Matern 3/2 path with l = 0.2 at
// 5 random inputs and refit. The geometric mean of recovered lengthscales
// over 50 seeds should be within a factor 3 of the truth.
TEST(FitMle, RecoversLengthscaleOnAverage) {
  const auto truth = GPHyperparams::isotropic(0.2, 1.0);
  double log_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    wbo::Rng rng(1000 + seed);
    const auto X = wbo::lhs(5, 1, seed);
    const Eigen::MatrixXd K = wbo::kernel_matrix(X, X, truth);
    const Eigen::MatrixXd L = K.llt().matrixL();
    Eigen::VectorXd z(5);
    for (int i = 0; i < 5; ++i) z[i] = rng.normal();
    const Eigen::VectorXd Y = L * z;
    wbo::GPConfig cfg;
    cfg.seed = seed;
    const auto m = wbo::fit_mle(X, Y, cfg);
    log_ratio += std::log(m.hyperparams().lengthscale() / 0.2);
  }
  EXPECT_LE(std::abs(log_ratio / 50.0), std::log(3.0));
}

TEST(FitMle, ArdFitsPerDimensionLengthscales) {
  const auto& p = wbo::find_problem("branin");
  const auto d = wbo::generate_design(p, wbo::DesignType::lhs, 25, 9, 0.07);
  wbo::GPConfig cfg;
  cfg.ard = true;
  const auto m = wbo::fit_mle(d.X, d.Y, cfg);
  EXPECT_EQ(m.hyperparams().lengthscales.size(), 2);
  const auto iso = wbo::fit_mle(d.X, d.Y);
  EXPECT_GE(m.log_marginal_likelihood(), iso.log_marginal_likelihood() - 1.0);
}

}  // namespace
