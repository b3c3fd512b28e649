#pragma once

// Model-quality and decision-quality measures, and Pearson correlation with
// a two-sided Student-t p-value.

#include "wbo/gp.hpp"
#include "wbo/problems.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace wbo {

/// Root mean squared error between f and a set of predictions on the same grid.
inline double rmse(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size() || truth.empty())
    throw std::invalid_argument("rmse: size mismatch or empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = truth[i] - predicted[i];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(truth.size()));
}

/// Objective values at every grid point.
inline Eigen::VectorXd evaluate_on_grid(const TestProblem& problem, const Grid& grid) {
  Eigen::VectorXd f(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    f[i] = problem.evaluate(Eigen::VectorXd(grid.points.row(i)));
  return f;
}

inline double rmse(const GPModel& model, const TestProblem& problem, const Grid& grid) {
  const Eigen::VectorXd f = evaluate_on_grid(problem, grid);
  const Eigen::VectorXd mu = model.predict_batch(grid.points).mean;
  return rmse(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
              std::span<const double>(mu.data(), static_cast<std::size_t>(mu.size())));
}

/// y+ - y': positive when the query improves on the best seen value.
inline double delta_y(double best_seen, double y_prime) { return best_seen - y_prime; }

inline double immediate_regret(double y_prime, double y_star) { return y_prime - y_star; }

/// Regularized incomplete beta function I_x(a, b), continued fraction
/// evaluated with the modified Lentz method.
inline double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;

  auto continued_fraction = [](double a, double b, double x) {
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < kTiny) d = kTiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < kTiny) c = kTiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
  };

  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * continued_fraction(a, b, x) / a;
  return 1.0 - std::exp(log_front) * continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("student_t_two_sided_p: dof must be > 0");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

struct CorrelationResult {
  double r = 0.0;
  double p_value = 1.0;
  int n_pairs = 0;
};

/// Sample Pearson correlation with its two-sided t-test p-value
/// (t = r sqrt((n-2)/(1-r^2)), n-2 degrees of freedom).
inline CorrelationResult pearson(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw std::invalid_argument("pearson: sizes differ (" + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  const std::size_t n = u.size();
  if (n < 3) throw std::invalid_argument("pearson: at least 3 pairs required");

  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  double suv = 0.0, suu = 0.0, svv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u[i] - mu;
    const double b = v[i] - mv;
    suv += a * b;
    suu += a * a;
    svv += b * b;
  }
  if (!(suu > 0.0) || !(svv > 0.0))
    throw std::domain_error("pearson: correlation undefined for a constant input");

  CorrelationResult out;
  out.n_pairs = static_cast<int>(n);
  out.r = std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
  const double dof = static_cast<double>(n) - 2.0;
  const double one_minus = 1.0 - out.r * out.r;
  if (one_minus <= 0.0) {
    out.p_value = 0.0;
  } else {
    const double t = out.r * std::sqrt(dof / one_minus);
    out.p_value = std::clamp(student_t_two_sided_p(t, dof), 0.0, 1.0);
  }
  return out;
}

inline CorrelationResult pearson(const std::vector<double>& u, const std::vector<double>& v) {
  return pearson(std::span<const double>(u), std::span<const double>(v));
}

}  // namespace wbo
