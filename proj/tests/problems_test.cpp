#include "wbo/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

namespace {

TEST(Problems, RegistryCounts) {
  EXPECT_EQ(wbo::list_problems(1).size(), 8u);
  EXPECT_EQ(wbo::list_problems(2).size(), 6u);
  EXPECT_EQ(wbo::list_problems().size(), 14u);
  const auto a = wbo::list_problems();
  const auto b = wbo::list_problems();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].name(), b[i].name());
  EXPECT_THROW(wbo::find_problem("nope"), std::invalid_argument);
}

TEST(Problems, OptimumConsistency) {
  for (const auto& p : wbo::list_problems()) {
    const auto xs = p.x_star();
    EXPECT_NEAR(p.evaluate(xs), p.y_star(), 1e-9) << p.name();
  }
}

TEST(Problems, YStarBoundsFinestGrid) {
  for (const auto& p : wbo::list_problems()) {
    const auto grid = wbo::make_grid(p.dim(), p.dim() == 1 ? 10000 : 100);
    double lowest = INFINITY;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double v = p.evaluate(Eigen::VectorXd(grid.points.row(i)));
      EXPECT_GE(v, p.y_star() - 1e-9) << p.name();
      lowest = std::min(lowest, v);
    }
    // Lattice minimum from an independent numpy evaluation of the original Branin.
    if (p.name() == "branin") EXPECT_NEAR(lowest, 0.40307127299759316, 1e-12);
  }
}

TEST(Problems, BraninFineLatticeApproachesOptimum) {
  const auto& p = wbo::find_problem("branin");
  const auto grid = wbo::make_grid(2, 1000);
  double lowest = INFINITY;
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    lowest = std::min(lowest, p.evaluate(Eigen::VectorXd(grid.points.row(i))));
  EXPECT_NEAR(lowest, p.y_star(), 1e-3);
}

TEST(Problems, Deterministic) {
  for (const auto& p : wbo::list_problems(1)) {
    const double a = p.evaluate(0.37);
    const double b = p.evaluate(0.37);
    EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
  }
  const auto& forrester = wbo::find_problem("forrester");
  EXPECT_NEAR(forrester.evaluate(0.75724875784185587005), -6.0207400557670827866, 1e-12);
}

TEST(Problems, DomainErrorsNameTheCoordinate) {
  const auto& b = wbo::find_problem("branin");
  try {
    b.evaluate(Eigen::Vector2d(0.5, 1.5));
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
  }
  EXPECT_THROW(wbo::find_problem("forrester").evaluate(-0.01), std::domain_error);
  EXPECT_NO_THROW(wbo::find_problem("forrester").evaluate(0.0));
  EXPECT_NO_THROW(wbo::find_problem("forrester").evaluate(1.0));
}

// Closed forms on the original boxes, written out independently of the
// registry implementation.
TEST(Problems, RescalingMatchesOriginalClosedForms) {
  struct Case {
    const char* name;
    double (*f)(double, double);
  };
  const Case cases[] = {
      {"branin",
       [](double x, double y) {
         const double pi = 3.14159265358979323846;
         return std::pow(y - 5.1 / (4 * pi * pi) * x * x + 5 / pi * x - 6, 2) +
                10 * (1 - 1 / (8 * pi)) * std::cos(x) + 10;
       }},
      {"himmelblau",
       [](double x, double y) { return std::pow(x * x + y - 11, 2) + std::pow(x + y * y - 7, 2); }},
      {"rosenbrock",
       [](double x, double y) { return 100 * std::pow(y - x * x, 2) + std::pow(1 - x, 2); }},
      {"six_hump_camel",
       [](double x, double y) {
         return (4 - 2.1 * x * x + std::pow(x, 4) / 3) * x * x + x * y + (-4 + 4 * y * y) * y * y;
       }},
  };
  for (const auto& c : cases) {
    const auto& p = wbo::find_problem(c.name);
    for (double u : {0.0, 0.13, 0.5, 0.77, 1.0}) {
      for (double v : {0.0, 0.41, 1.0}) {
        const double x = p.lower()[0] + u * (p.upper()[0] - p.lower()[0]);
        const double y = p.lower()[1] + v * (p.upper()[1] - p.lower()[1]);
        EXPECT_NEAR(p.evaluate(Eigen::Vector2d(u, v)), c.f(x, y), 1e-9 * (1 + std::abs(c.f(x, y))))
            << c.name;
      }
    }
  }
  const auto& g = wbo::find_problem("gramacy_lee");
  for (double u : {0.0, 0.3, 1.0}) {
    const double x = 0.5 + 2.0 * u;
    EXPECT_NEAR(g.evaluate(u), std::sin(10 * M_PI * x) / (2 * x) + std::pow(x - 1, 4), 1e-9);
  }
  const auto& s = wbo::find_problem("schwefel_1d");
  for (double u : {0.0, 0.25, 0.9}) {
    const double x = -500.0 + 1000.0 * u;
    EXPECT_NEAR(s.evaluate(u), 418.9829 - x * std::sin(std::sqrt(std::abs(x))), 1e-9);
  }
}

TEST(Grid, Lattices) {
  const auto g1 = wbo::make_grid(1, 3);
  ASSERT_EQ(g1.size(), 3);
  EXPECT_EQ(g1.points(0, 0), 0.0);
  EXPECT_EQ(g1.points(1, 0), 0.5);
  EXPECT_EQ(g1.points(2, 0), 1.0);

  const auto g2 = wbo::make_grid(2, 2);
  ASSERT_EQ(g2.size(), 4);
  const double expected[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(g2.points(i, 0), expected[i][0]);
    EXPECT_EQ(g2.points(i, 1), expected[i][1]);
  }

  EXPECT_EQ(wbo::make_grid(2, 100).size(), 10000);
  EXPECT_EQ(wbo::make_grid(1, 10000).size(), 10000);
  EXPECT_THROW(wbo::make_grid(1, 1), std::invalid_argument);
}

TEST(Grid, SpacingAndEndpoints) {
  for (int m : {2, 7, 100}) {
    const auto g = wbo::make_grid(1, m);
    EXPECT_EQ(g.points(0, 0), 0.0);
    EXPECT_EQ(g.points(m - 1, 0), 1.0);
    for (int i = 1; i < m; ++i) {
      EXPECT_GT(g.points(i, 0), g.points(i - 1, 0));
      EXPECT_NEAR(g.points(i, 0) - g.points(i - 1, 0), 1.0 / (m - 1), 1e-15);
    }
  }
}

}  // namespace
