#pragma once

// Initial designs (pure LHS, and LHS half-mixed with a local cluster) and
// their Wasserstein featurization: coverage of the box (s1) and spread of
// the observed values above the best seen one (s2).

#include "wbo/problems.hpp"
#include "wbo/rng.hpp"
#include "wbo/transport.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbo {

enum class DesignType { lhs, lhs_near_opt, lhs_near_wrong };

inline const char* to_string(DesignType t) {
  switch (t) {
    case DesignType::lhs: return "lhs";
    case DesignType::lhs_near_opt: return "near-opt";
    case DesignType::lhs_near_wrong: return "near-wrong";
  }
  return "?";
}

inline DesignType parse_design_type(const std::string& s) {
  if (s == "lhs") return DesignType::lhs;
  if (s == "near-opt" || s == "lhs_near_opt") return DesignType::lhs_near_opt;
  if (s == "near-wrong" || s == "lhs_near_wrong") return DesignType::lhs_near_wrong;
  throw std::invalid_argument("unknown design type '" + s + "' (expected lhs|near-opt|near-wrong)");
}

inline constexpr DesignType kAllDesignTypes[] = {DesignType::lhs, DesignType::lhs_near_opt,
                                                 DesignType::lhs_near_wrong};

/// Design sizes {5d, floor(12.5d), 20d}.
inline std::vector<int> default_sizes(int dim) {
  return {5 * dim, static_cast<int>(std::floor(12.5 * dim)), 20 * dim};
}

inline double default_radius(int dim) { return 0.05 * std::sqrt(static_cast<double>(dim)); }

/// Featurization grid resolution: 100 points in 1D, 50 x 50 in 2D.
inline int default_featurization_points(int dim) { return dim == 1 ? 100 : 50; }

/// Acquisition grid resolution giving 10,000 points for d in {1, 2}.
inline int default_acquisition_points(int dim) { return dim == 1 ? 10000 : 100; }

/// Minimum separation between the decoy anchor and the true optimizer.
inline constexpr double kDecoySeparation = 0.2;

struct Design {
  Eigen::MatrixXd X;  // n x d, rows in [0,1]^d
  Eigen::VectorXd Y;  // f(X_i)
  DesignType type = DesignType::lhs;
  int n = 0;
  std::string problem_name;
  std::uint64_t seed = 0;
  std::optional<Point> anchor;  // cluster center for the mixed types

  int dim() const noexcept { return static_cast<int>(X.cols()); }
};

struct Featurization {
  double s1 = 0.0;
  double s2 = 0.0;
  S2Mode s2_mode = S2Mode::exact;
  Point best_seen_x;
  double best_seen_y = 0.0;
  Eigen::Index best_seen_index = 0;
  int grid_points_per_dim = 0;
};

/// Latin hypercube sample: one point per stratum [k/n, (k+1)/n) on every axis.
inline Eigen::MatrixXd lhs(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("lhs: n and d must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  const double below_one = std::nextafter(1.0, 0.0);
  for (int k = 0; k < d; ++k) {
    const auto perm = rng.permutation(n);
    for (int i = 0; i < n; ++i) {
      const double v = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
      // Keep the top stratum half-open even after rounding.
      x(i, k) = std::min(v, below_one);
    }
  }
  return x;
}

/// k points uniform in the Euclidean ball of `radius` about `center`,
/// restricted to the unit box by rejection.
inline Eigen::MatrixXd neighborhood_sample(const Point& center, double radius, int k,
                                           std::uint64_t seed) {
  if (!(radius > 0.0)) throw std::invalid_argument("neighborhood_sample: radius must be > 0");
  const auto d = center.size();
  for (Eigen::Index i = 0; i < d; ++i)
    if (!(center[i] >= 0.0 && center[i] <= 1.0))
      throw std::invalid_argument("neighborhood_sample: center outside the unit box");
  Rng rng(seed);
  Eigen::MatrixXd out(k, d);
  Point cand(d);
  for (int row = 0; row < k;) {
    for (Eigen::Index i = 0; i < d; ++i) cand[i] = center[i] + radius * (2.0 * rng.uniform() - 1.0);
    if ((cand - center).norm() > radius) continue;
    if ((cand.array() < 0.0).any() || (cand.array() > 1.0).any()) continue;
    out.row(row++) = cand.transpose();
  }
  return out;
}

/// Uniform point of the box at distance >= kDecoySeparation from x_star.
inline Point decoy_anchor(const Point& x_star, std::uint64_t seed) {
  Rng rng(seed);
  Point p(x_star.size());
  do {
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.uniform();
  } while ((p - x_star).norm() < kDecoySeparation);
  return p;
}

inline Design generate_design(const TestProblem& problem, DesignType type, int n,
                              std::uint64_t seed, double radius) {
  if (n < 2) throw std::invalid_argument("generate_design: n must be >= 2");
  const int d = problem.dim();
  Design design;
  design.type = type;
  design.n = n;
  design.problem_name = problem.name();
  design.seed = seed;

  if (type == DesignType::lhs) {
    design.X = lhs(n, d, combine_seed(seed, 1));
  } else {
    const int n_lhs = (n + 1) / 2;
    const int n_local = n / 2;
    const Point center = type == DesignType::lhs_near_opt ? problem.x_star()
                                                          : decoy_anchor(problem.x_star(),
                                                                         combine_seed(seed, 3));
    design.anchor = center;
    design.X.resize(n, d);
    design.X.topRows(n_lhs) = lhs(n_lhs, d, combine_seed(seed, 1));
    design.X.bottomRows(n_local) = neighborhood_sample(center, radius, n_local,
                                                       combine_seed(seed, 2));
  }

  design.Y.resize(n);
  for (int i = 0; i < n; ++i) design.Y[i] = problem.evaluate(Eigen::VectorXd(design.X.row(i)));
  return design;
}

/// s1 = W2^2(uniform on X, uniform on grid); s2 = W2^2(uniform on Y, Dirac at min Y).
inline Featurization featurize(const Design& design, const Grid& grid,
                               S2Mode mode = S2Mode::exact) {
  if (grid.dim != design.dim())
    throw std::invalid_argument("featurize: grid dimension " + std::to_string(grid.dim) +
                                " does not match design dimension " +
                                std::to_string(design.dim()));
  if (design.Y.size() != design.X.rows() || design.X.rows() < 1)
    throw std::invalid_argument("featurize: malformed design");

  Featurization f;
  f.s2_mode = mode;
  f.grid_points_per_dim = grid.points_per_dim;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < design.Y.size(); ++i)
    if (design.Y[i] < design.Y[best]) best = i;
  f.best_seen_index = best;
  f.best_seen_y = design.Y[best];
  f.best_seen_x = design.X.row(best).transpose();

  f.s1 = w2_squared(PointCloud::uniform(design.X), PointCloud::uniform(grid.points)).cost;
  const std::vector<double> y(design.Y.data(), design.Y.data() + design.Y.size());
  f.s2 = w2_squared_to_dirac(y, f.best_seen_y, mode);
  return f;
}

}  // namespace wbo
