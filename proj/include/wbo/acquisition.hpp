#pragma once

// Grid-restricted myopic acquisition policies sharing one fitted GP.
// Ties resolve to the lowest grid index.

#include "wbo/gp.hpp"
#include "wbo/problems.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace wbo {

enum class Policy { sr, sd, ei, lcb };

inline constexpr Policy kAllPolicies[] = {Policy::sr, Policy::sd, Policy::ei, Policy::lcb};

inline const char* to_string(Policy p) {
  switch (p) {
    case Policy::sr: return "SR";
    case Policy::sd: return "SD";
    case Policy::ei: return "EI";
    case Policy::lcb: return "LCB";
  }
  return "?";
}

struct AcquisitionChoice {
  Policy policy = Policy::sr;
  Point x_prime;
  double acq_value = 0.0;
  Eigen::Index grid_index = 0;
};

/// Posterior mean and standard deviation over a whole grid; computed once
/// and reused by every policy.
struct GridPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

inline GridPosterior evaluate_posterior(const GPModel& model, const Grid& grid) {
  if (grid.dim != model.dim())
    throw std::invalid_argument("acquisition: grid dimension " + std::to_string(grid.dim) +
                                " does not match model dimension " +
                                std::to_string(model.dim()));
  auto batch = model.predict_batch(grid.points);
  return {std::move(batch.mean), std::move(batch.sd)};
}

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Expected improvement below `best_seen` for a N(mean, sd^2) outcome.
inline double ei_value(double mean, double sd, double best_seen) {
  if (sd < 0.0) throw std::invalid_argument("ei_value: sd must be >= 0");
  const double gap = best_seen - mean;
  if (sd == 0.0) return gap > 0.0 ? gap : 0.0;
  const double z = gap / sd;
  const double v = gap * normal_cdf(z) + sd * normal_pdf(z);
  return v > 0.0 ? v : 0.0;
}

namespace detail {

template <class Criterion>
AcquisitionChoice pick(Policy policy, const Grid& grid, Eigen::Index count, bool maximize,
                       Criterion criterion) {
  Eigen::Index best = 0;
  double best_val = criterion(0);
  for (Eigen::Index i = 1; i < count; ++i) {
    const double v = criterion(i);
    if (maximize ? v > best_val : v < best_val) {
      best = i;
      best_val = v;
    }
  }
  AcquisitionChoice c;
  c.policy = policy;
  c.grid_index = best;
  c.acq_value = best_val;
  c.x_prime = grid.points.row(best).transpose();
  return c;
}

}  // namespace detail

inline AcquisitionChoice choose_sr(const GridPosterior& post, const Grid& grid) {
  return detail::pick(Policy::sr, grid, post.mean.size(), false,
                      [&](Eigen::Index i) { return post.mean[i]; });
}

inline AcquisitionChoice choose_sd(const GridPosterior& post, const Grid& grid) {
  return detail::pick(Policy::sd, grid, post.sd.size(), true,
                      [&](Eigen::Index i) { return post.sd[i]; });
}

inline AcquisitionChoice choose_ei(const GridPosterior& post, const Grid& grid, double best_seen) {
  return detail::pick(Policy::ei, grid, post.mean.size(), true, [&](Eigen::Index i) {
    return ei_value(post.mean[i], post.sd[i], best_seen);
  });
}

inline AcquisitionChoice choose_lcb(const GridPosterior& post, const Grid& grid,
                                    double beta = 1.0) {
  if (!(beta >= 0.0)) throw std::invalid_argument("choose_lcb: beta must be >= 0");
  return detail::pick(Policy::lcb, grid, post.mean.size(), false,
                      [&](Eigen::Index i) { return post.mean[i] - beta * post.sd[i]; });
}

inline AcquisitionChoice choose_sr(const GPModel& model, const Grid& grid) {
  return choose_sr(evaluate_posterior(model, grid), grid);
}

inline AcquisitionChoice choose_sd(const GPModel& model, const Grid& grid) {
  return choose_sd(evaluate_posterior(model, grid), grid);
}

inline AcquisitionChoice choose_ei(const GPModel& model, const Grid& grid, double best_seen) {
  return choose_ei(evaluate_posterior(model, grid), grid, best_seen);
}

inline AcquisitionChoice choose_lcb(const GPModel& model, const Grid& grid, double beta = 1.0) {
  if (!(beta >= 0.0)) throw std::invalid_argument("choose_lcb: beta must be >= 0");
  return choose_lcb(evaluate_posterior(model, grid), grid, beta);
}

/// Criterion value of `policy` at one grid index (LCB uses beta = 1).
inline double criterion_at(Policy policy, const GridPosterior& post, Eigen::Index i,
                           double best_seen, double beta = 1.0) {
  switch (policy) {
    case Policy::sr: return post.mean[i];
    case Policy::sd: return post.sd[i];
    case Policy::ei: return ei_value(post.mean[i], post.sd[i], best_seen);
    case Policy::lcb: return post.mean[i] - beta * post.sd[i];
  }
  return 0.0;
}

inline AcquisitionChoice choose(Policy policy, const GridPosterior& post, const Grid& grid,
                                double best_seen, double beta = 1.0) {
  switch (policy) {
    case Policy::sr: return choose_sr(post, grid);
    case Policy::sd: return choose_sd(post, grid);
    case Policy::ei: return choose_ei(post, grid, best_seen);
    case Policy::lcb: return choose_lcb(post, grid, beta);
  }
  throw std::invalid_argument("unknown policy");
}

}  // namespace wbo
