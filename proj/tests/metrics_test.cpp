#include "wbo/metrics.hpp"
#include "wbo/rng.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include <algorithm>

namespace {

TEST(Rmse, HandComputed) {
  const std::vector<double> f{1.0, 2.0, 4.0};
  const std::vector<double> mu{1.5, 2.0, 3.0};
  EXPECT_NEAR(wbo::rmse(f, mu), std::sqrt((0.25 + 0.0 + 1.0) / 3.0), 1e-12);
  EXPECT_THROW(wbo::rmse(f, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Rmse, OrderInvariant) {
  wbo::Rng rng(1);
  std::vector<double> f(100), mu(100);
  for (int i = 0; i < 100; ++i) {
    f[i] = rng.uniform();
    mu[i] = rng.uniform();
  }
  const double base = wbo::rmse(f, mu);
  const auto perm = rng.permutation(100);
  std::vector<double> f2(100), mu2(100);
  for (int i = 0; i < 100; ++i) {
    f2[i] = f[perm[i]];
    mu2[i] = mu[perm[i]];
  }
  EXPECT_NEAR(wbo::rmse(f2, mu2), base, 1e-15);
}

TEST(Rmse, ModelOnFullGridInterpolates) {
  const auto& p = wbo::find_problem("forrester");
  const auto grid = wbo::make_grid(1, 9);
  const auto f = wbo::evaluate_on_grid(p, grid);
  const wbo::GPModel model(wbo::GPHyperparams::isotropic(0.15, 50.0, f.mean()), grid.points, f);
  ASSERT_EQ(model.hyperparams().nugget, 0.0);
  EXPECT_LE(wbo::rmse(model, p, grid), 1e-5);
}

TEST(Rmse, ConstantFunctionConstantMean) {
  const wbo::TestProblem flat("flat", {0.0}, {1.0}, [](std::span<const double>) { return 4.0; },
                              {0.5}, 4.0);
  Eigen::MatrixXd X(3, 1);
  X << 0.1, 0.5, 0.9;
  const auto model = wbo::fit_mle(X, Eigen::Vector3d::Constant(4.0));
  EXPECT_LE(wbo::rmse(model, flat, wbo::make_grid(1, 200)), 1e-6);
}

TEST(DeltaAndRegret, SignConventions) {
  EXPECT_EQ(wbo::delta_y(5.0, 5.0), 0.0);
  EXPECT_EQ(wbo::delta_y(5.0, 3.0), 2.0);
  EXPECT_EQ(wbo::delta_y(3.0, 5.0), -2.0);
  EXPECT_EQ(wbo::immediate_regret(1.25, 1.25), 0.0);
  EXPECT_EQ(wbo::immediate_regret(2.25, 1.25), 1.0);
  // (y+ - y') + (y' - y*) = y+ - y*
  const double yb = 3.7, yp = 1.2, ys = -0.4;
  EXPECT_NEAR(wbo::delta_y(yb, yp) + wbo::immediate_regret(yp, ys), yb - ys, 1e-12);
}

TEST(IncompleteBeta, ReferenceValues) {
  // mpmath betainc(regularized=True), 30 digits
  EXPECT_NEAR(wbo::incomplete_beta(2.5, 3.5, 0.3), 0.296752989295666378323, 1e-13);
  EXPECT_NEAR(wbo::incomplete_beta(0.5, 0.5, 0.9), 0.795167235300866571910, 1e-13);
  EXPECT_EQ(wbo::incomplete_beta(2.0, 3.0, 0.0), 0.0);
  EXPECT_EQ(wbo::incomplete_beta(2.0, 3.0, 1.0), 1.0);
}

TEST(StudentT, TwoSidedTailAgainstReferences) {
  // t for r = 0.8 at n = 5 (3 dof); reference 0.104088038661827838592
  const double t = 0.8 * std::sqrt(3.0 / 0.36);
  EXPECT_NEAR(wbo::student_t_two_sided_p(t, 3.0), 0.104088038661827838592, 1e-12);
  EXPECT_NEAR(wbo::student_t_two_sided_p(2.0, 10.0), 0.0733880347707403656178, 1e-12);
  EXPECT_NEAR(wbo::student_t_two_sided_p(0.5, 1.0), 0.704832764699133451649, 1e-12);
  EXPECT_NEAR(wbo::student_t_two_sided_p(5.0, 50.0), 7.43321224723257395545e-6, 1e-15);
  EXPECT_EQ(wbo::student_t_two_sided_p(0.0, 7.0), 1.0);
}

TEST(StudentT, AgreesWithBoostAcrossRange) {
  for (double dof : {1.0, 2.0, 5.0, 28.0, 178.0, 238.0}) {
    const boost::math::students_t dist(dof);
    for (double t : {0.01, 0.3, 1.0, 1.96, 3.5, 8.0, 25.0}) {
      const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
      EXPECT_NEAR(wbo::student_t_two_sided_p(t, dof), ref, 1e-12 + 1e-10 * ref)
          << "dof " << dof << " t " << t;
    }
  }
}

TEST(Pearson, Examples) {
  const std::vector<double> u{1, 2, 3, 4, 5};
  const auto self = wbo::pearson(u, u);
  EXPECT_NEAR(self.r, 1.0, 1e-15);
  EXPECT_NEAR(self.p_value, 0.0, 1e-12);
  const std::vector<double> neg{-1, -2, -3, -4, -5};
  EXPECT_NEAR(wbo::pearson(u, neg).r, -1.0, 1e-15);

  // r = 10 / sqrt(148); p from a 30-digit t-distribution evaluation.
  const auto res = wbo::pearson(u, std::vector<double>{2, 1, 4, 3, 6});
  EXPECT_NEAR(res.r, 0.821994936526786444459, 1e-14);
  EXPECT_NEAR(res.p_value, 0.0877066470080655472502, 1e-12);
  EXPECT_EQ(res.n_pairs, 5);
}

TEST(Pearson, Errors) {
  EXPECT_THROW(wbo::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
               std::invalid_argument);
  EXPECT_THROW(wbo::pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}),
               std::invalid_argument);
  EXPECT_THROW(wbo::pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
               std::domain_error);
}

TEST(Pearson, SymmetricAndAffineInvariant) {
  wbo::Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(40));
    std::vector<double> u(n), v(n);
    for (int i = 0; i < n; ++i) {
      u[i] = rng.normal();
      v[i] = 0.5 * u[i] + rng.normal();
    }
    const auto a = wbo::pearson(u, v);
    const auto b = wbo::pearson(v, u);
    EXPECT_NEAR(a.r, b.r, 1e-12);
    EXPECT_NEAR(a.p_value, b.p_value, 1e-12);
    EXPECT_LE(std::abs(a.r), 1.0);
    EXPECT_GE(a.p_value, 0.0);
    EXPECT_LE(a.p_value, 1.0);

    std::vector<double> up(n), un(n);
    for (int i = 0; i < n; ++i) {
      up[i] = 3.5 * u[i] - 12.0;
      un[i] = -0.25 * u[i] + 7.0;
    }
    EXPECT_NEAR(wbo::pearson(up, v).r, a.r, 1e-12);
    EXPECT_NEAR(wbo::pearson(un, v).r, -a.r, 1e-12);
  }
}

}  // namespace
