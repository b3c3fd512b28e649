#pragma once

// Benchmark objectives rescaled to the unit box, plus regular lattices over it.
//
// Every problem is stated on its customary box [lo, hi]^d and exposed on
// [0,1]^d through x = lo + u (hi - lo). All problems are minimization
// problems; x_star and y_star are given in rescaled coordinates.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbo {

using Point = Eigen::VectorXd;

class TestProblem {
 public:
  using RawFunction = std::function<double(std::span<const double>)>;

  TestProblem(std::string name, std::vector<double> lower, std::vector<double> upper,
              RawFunction raw, std::vector<double> x_star, double y_star)
      : name_(std::move(name)),
        lower_(std::move(lower)),
        upper_(std::move(upper)),
        raw_(std::move(raw)),
        x_star_(std::move(x_star)),
        y_star_(y_star) {
    if (lower_.size() != upper_.size() || lower_.size() != x_star_.size() || lower_.empty())
      throw std::invalid_argument("TestProblem '" + name_ + "': inconsistent dimensions");
  }

  const std::string& name() const noexcept { return name_; }
  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  Point x_star() const { return Eigen::Map<const Eigen::VectorXd>(x_star_.data(), dim()); }
  double y_star() const noexcept { return y_star_; }

  /// Map a unit-box point to the original box.
  std::vector<double> unscale(std::span<const double> u) const {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = lower_[i] + u[i] * (upper_[i] - lower_[i]);
    return x;
  }

  /// f(u) for u in [0,1]^d. Throws std::domain_error naming the first
  /// coordinate outside the box.
  double evaluate(std::span<const double> u) const {
    if (static_cast<int>(u.size()) != dim())
      throw std::invalid_argument(name_ + ": expected a point of dimension " +
                                  std::to_string(dim()) + ", got " + std::to_string(u.size()));
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!(u[i] >= 0.0 && u[i] <= 1.0))
        throw std::domain_error(name_ + ": coordinate " + std::to_string(i) + " = " +
                                std::to_string(u[i]) + " outside [0, 1]");
    }
    const auto x = unscale(u);
    return raw_(x);
  }

  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& u) const {
    return evaluate(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())));
  }

  double evaluate(double u) const { return evaluate(std::span<const double>(&u, 1)); }

  /// The objective on its original box, without rescaling or domain checks.
  double evaluate_original(std::span<const double> x) const { return raw_(x); }

 private:
  std::string name_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  RawFunction raw_;
  std::vector<double> x_star_;
  double y_star_;
};

/// Regular lattice over [0,1]^d with m points per axis, first axis slowest.
struct Grid {
  int dim = 0;
  int points_per_dim = 0;
  Eigen::MatrixXd points;  // m^d x d

  Eigen::Index size() const noexcept { return points.rows(); }
  double weight() const noexcept { return 1.0 / static_cast<double>(points.rows()); }
};

inline Grid make_grid(int dim, int points_per_dim) {
  if (points_per_dim < 2)
    throw std::invalid_argument("make_grid: points_per_dim must be >= 2, got " +
                                std::to_string(points_per_dim));
  if (dim < 1) throw std::invalid_argument("make_grid: dim must be >= 1");
  Eigen::Index total = 1;
  for (int k = 0; k < dim; ++k) total *= points_per_dim;

  Grid g;
  g.dim = dim;
  g.points_per_dim = points_per_dim;
  g.points.resize(total, dim);
  const double denom = static_cast<double>(points_per_dim - 1);
  for (Eigen::Index row = 0; row < total; ++row) {
    Eigen::Index rem = row;
    for (int axis = dim - 1; axis >= 0; --axis) {
      const auto k = rem % points_per_dim;
      rem /= points_per_dim;
      g.points(row, axis) = static_cast<double>(k) / denom;
    }
  }
  return g;
}

namespace detail {

inline double forrester(std::span<const double> x) {
  const double t = 6.0 * x[0] - 2.0;
  return t * t * std::sin(12.0 * x[0] - 4.0);
}

inline double gramacy_lee(std::span<const double> x) {
  const double a = x[0] - 1.0;
  return std::sin(10.0 * M_PI * x[0]) / (2.0 * x[0]) + a * a * a * a;
}

inline double ackley(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0;
  double cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * M_PI * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::exp(1.0);
}

inline double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * M_PI * v);
  return s;
}

inline double levy(std::span<const double> x) {
  const std::size_t d = x.size();
  auto w = [&](std::size_t i) { return 1.0 + (x[i] - 1.0) / 4.0; };
  const double s0 = std::sin(M_PI * w(0));
  double s = s0 * s0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    const double wi = w(i);
    const double si = std::sin(M_PI * wi + 1.0);
    s += (wi - 1.0) * (wi - 1.0) * (1.0 + 10.0 * si * si);
  }
  const double wd = w(d - 1);
  const double sd = std::sin(2.0 * M_PI * wd);
  return s + (wd - 1.0) * (wd - 1.0) * (1.0 + sd * sd);
}

inline double schwefel(std::span<const double> x) {
  double s = 418.9829 * static_cast<double>(x.size());
  for (double v : x) s -= v * std::sin(std::sqrt(std::abs(v)));
  return s;
}

inline double griewank(std::span<const double> x) {
  double sum = 0.0;
  double prod = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i] * x[i] / 4000.0;
    prod *= std::cos(x[i] / std::sqrt(static_cast<double>(i + 1)));
  }
  return sum - prod + 1.0;
}

inline double damped_sine(std::span<const double> x) {
  return std::exp(-2.0 * x[0]) * std::sin(10.0 * M_PI * x[0]);
}

inline double branin(std::span<const double> x) {
  const double b = 5.1 / (4.0 * M_PI * M_PI);
  const double c = 5.0 / M_PI;
  const double t = 1.0 / (8.0 * M_PI);
  const double q = x[1] - b * x[0] * x[0] + c * x[0] - 6.0;
  return q * q + 10.0 * (1.0 - t) * std::cos(x[0]) + 10.0;
}

inline double six_hump_camel(std::span<const double> x) {
  const double a = x[0] * x[0];
  const double b = x[1] * x[1];
  return (4.0 - 2.1 * a + a * a / 3.0) * a + x[0] * x[1] + (-4.0 + 4.0 * b) * b;
}

inline double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i];
    const double b = 1.0 - x[i];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

inline double himmelblau(std::span<const double> x) {
  const double a = x[0] * x[0] + x[1] - 11.0;
  const double b = x[0] + x[1] * x[1] - 7.0;
  return a * a + b * b;
}

inline double michalewicz(std::span<const double> x) {
  constexpr int steep = 10;
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = std::sin(static_cast<double>(i + 1) * x[i] * x[i] / M_PI);
    s -= std::sin(x[i]) * std::pow(r, 2 * steep);
  }
  return s;
}

inline std::vector<TestProblem> build_registry() {
  std::vector<TestProblem> p;
  // d = 1
  p.emplace_back("forrester", std::vector{0.0}, std::vector{1.0}, forrester,
                 std::vector{0.75724875784185587005}, -6.0207400557670827866);
  p.emplace_back("gramacy_lee", std::vector{0.5}, std::vector{2.5}, gramacy_lee,
                 std::vector{0.024281722263802592034}, -0.86901113498949976988);
  p.emplace_back("ackley_1d", std::vector{-32.768}, std::vector{32.768}, ackley,
                 std::vector{0.5}, 0.0);
  p.emplace_back("rastrigin_1d", std::vector{-5.12}, std::vector{5.12}, rastrigin,
                 std::vector{0.5}, 0.0);
  p.emplace_back("levy_1d", std::vector{-10.0}, std::vector{10.0}, levy, std::vector{0.55}, 0.0);
  p.emplace_back("schwefel_1d", std::vector{-500.0}, std::vector{500.0}, schwefel,
                 std::vector{0.92096874635998202731}, 0.000012727566293725213565);
  p.emplace_back("griewank_1d", std::vector{-600.0}, std::vector{600.0}, griewank,
                 std::vector{0.5}, 0.0);
  p.emplace_back("damped_sine", std::vector{0.0}, std::vector{1.0}, damped_sine,
                 std::vector{0.14797630728459857041}, -0.74231993989185144986);
  // d = 2
  p.emplace_back("branin", std::vector{-5.0, 0.0}, std::vector{10.0, 15.0}, branin,
                 std::vector{(M_PI + 5.0) / 15.0, 2.275 / 15.0}, 0.39788735772973833942);
  p.emplace_back("six_hump_camel", std::vector{-3.0, -2.0}, std::vector{3.0, 2.0}, six_hump_camel,
                 std::vector{0.5149736688500530104, 0.32183589924481509165},
                 -1.0316284534898773504);
  p.emplace_back("ackley_2d", std::vector{-32.768, -32.768}, std::vector{32.768, 32.768}, ackley,
                 std::vector{0.5, 0.5}, 0.0);
  p.emplace_back("rosenbrock", std::vector{-2.048, -2.048}, std::vector{2.048, 2.048}, rosenbrock,
                 std::vector{0.744140625, 0.744140625}, 0.0);
  p.emplace_back("himmelblau", std::vector{-5.0, -5.0}, std::vector{5.0, 5.0}, himmelblau,
                 std::vector{0.8, 0.7}, 0.0);
  p.emplace_back("michalewicz", std::vector{0.0, 0.0}, std::vector{M_PI, M_PI}, michalewicz,
                 std::vector{0.70120660539978746616, 0.5}, -1.8013034100985525327);
  return p;
}

}  // namespace detail

/// The full suite, 1D problems first, in a fixed order.
inline const std::vector<TestProblem>& all_problems() {
  static const std::vector<TestProblem> registry = detail::build_registry();
  return registry;
}

/// Problems of one dimension (or all of them when dim is empty), registry order.
inline std::vector<TestProblem> list_problems(std::optional<int> dim = std::nullopt) {
  std::vector<TestProblem> out;
  for (const auto& p : all_problems())
    if (!dim || p.dim() == *dim) out.push_back(p);
  return out;
}

inline const TestProblem& find_problem(const std::string& name) {
  for (const auto& p : all_problems())
    if (p.name() == name) return p;
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace wbo
