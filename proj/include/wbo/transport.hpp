#pragma once

// Exact squared 2-Wasserstein distances between discrete distributions.
//
// The general solver is a primal network simplex on the complete bipartite
// transportation graph with squared Euclidean arc costs. It keeps a strongly
// feasible spanning tree (Cunningham's leaving-arc rule), which rules out
// cycling on the heavily degenerate uniform-weight problems used here.
// Closed forms for one dimension and for a Dirac target serve as
// independent cross-checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbo {

/// Finite weighted support of an empirical distribution. Rows of `points`
/// are locations; `weights` sums to one.
struct PointCloud {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  static PointCloud uniform(Eigen::MatrixXd pts) {
    PointCloud c;
    const auto m = pts.rows();
    c.points = std::move(pts);
    c.weights = Eigen::VectorXd::Constant(m, m > 0 ? 1.0 / static_cast<double>(m) : 0.0);
    return c;
  }

  static PointCloud uniform(const std::vector<double>& values) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) pts(static_cast<Eigen::Index>(i), 0) = values[i];
    return uniform(std::move(pts));
  }

  Eigen::Index size() const noexcept { return points.rows(); }
  Eigen::Index dim() const noexcept { return points.cols(); }

  bool has_uniform_weights() const {
    for (Eigen::Index i = 1; i < weights.size(); ++i)
      if (weights[i] != weights[0]) return false;
    return true;
  }

  void validate(const char* who) const {
    if (points.rows() < 1) throw std::invalid_argument(std::string(who) + ": empty point cloud");
    if (weights.size() != points.rows())
      throw std::invalid_argument(std::string(who) + ": weight count does not match point count");
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw std::invalid_argument(std::string(who) + ": negative weight");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument(std::string(who) + ": weights sum to " + std::to_string(total) +
                                  ", expected 1");
    if (!points.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite point");
  }
};

/// Optimal coupling between two clouds. `cost` is the squared 2-Wasserstein
/// value sum_jl |a_j - b_l|^2 T_jl.
struct TransportPlan {
  Eigen::MatrixXd coupling;
  double cost = 0.0;
  Eigen::VectorXd source_marginal;
  Eigen::VectorXd target_marginal;
};

enum class S2Mode { exact, paper_compat };

inline const char* to_string(S2Mode m) { return m == S2Mode::exact ? "exact" : "paper_compat"; }

namespace detail {

/// Network simplex on a complete bipartite graph, sources 0..n1-1 and sinks
/// n1..n1+n2-1, plus an artificial root. Arc e = i*n2 + j runs from source i
/// to sink j; arcs >= n1*n2 are the artificial root arcs of each node.
class BipartiteNetworkSimplex {
 public:
  BipartiteNetworkSimplex(std::vector<double> supply, std::vector<double> demand,
                          std::vector<double> cost)
      : n1_(static_cast<int>(supply.size())),
        n2_(static_cast<int>(demand.size())),
        node_num_(n1_ + n2_),
        arc_num_(static_cast<std::int64_t>(n1_) * n2_),
        cost_(std::move(cost)) {
    const int all_nodes = node_num_ + 1;
    const std::int64_t all_arcs = arc_num_ + node_num_;
    supply_.resize(static_cast<std::size_t>(all_nodes));
    for (int i = 0; i < n1_; ++i) supply_[i] = supply[i];
    for (int j = 0; j < n2_; ++j) supply_[n1_ + j] = -demand[j];
    cost_.resize(static_cast<std::size_t>(all_arcs), 0.0);
    flow_.assign(static_cast<std::size_t>(all_arcs), 0.0);
    state_.assign(static_cast<std::size_t>(arc_num_), kLower);
    parent_.resize(all_nodes);
    pred_.resize(all_nodes);
    dir_.resize(all_nodes);
    depth_.resize(all_nodes);
    pi_.resize(all_nodes);
    first_child_.assign(all_nodes, -1);
    next_sib_.assign(all_nodes, -1);
    prev_sib_.assign(all_nodes, -1);

    double max_cost = 0.0;
    for (std::int64_t e = 0; e < arc_num_; ++e) max_cost = std::max(max_cost, cost_[e]);
    // Any artificial path source -> root -> sink can be replaced by the
    // direct arc, so exceeding the largest arc cost is enough.
    art_cost_ = max_cost + 1.0;
    eps_ = 1e-12 * art_cost_;
    block_size_ = std::max<std::int64_t>(
        10, static_cast<std::int64_t>(std::sqrt(static_cast<double>(arc_num_))));
  }

  void solve() {
    init();
    while (find_entering_arc()) {
      find_join_node();
      find_leaving_arc();
      change_flow();
      update_tree();
    }
  }

  double flow(int i, int j) const {
    return flow_[static_cast<std::size_t>(static_cast<std::int64_t>(i) * n2_ + j)];
  }

  std::int64_t pivots() const noexcept { return pivots_; }

 private:
  static constexpr int kUp = 1;
  static constexpr int kDown = -1;
  static constexpr std::int8_t kLower = 1;
  static constexpr std::int8_t kTree = 0;

  int arc_source(std::int64_t e) const {
    if (e < arc_num_) return static_cast<int>(e / n2_);
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0 ? u : node_num_;
  }
  int arc_target(std::int64_t e) const {
    if (e < arc_num_) return n1_ + static_cast<int>(e % n2_);
    const int u = static_cast<int>(e - arc_num_);
    return supply_[u] >= 0 ? node_num_ : u;
  }

  void attach(int child, int parent) {
    prev_sib_[child] = -1;
    next_sib_[child] = first_child_[parent];
    if (first_child_[parent] >= 0) prev_sib_[first_child_[parent]] = child;
    first_child_[parent] = child;
  }

  void detach(int child, int parent) {
    if (prev_sib_[child] >= 0)
      next_sib_[prev_sib_[child]] = next_sib_[child];
    else
      first_child_[parent] = next_sib_[child];
    if (next_sib_[child] >= 0) prev_sib_[next_sib_[child]] = prev_sib_[child];
    prev_sib_[child] = next_sib_[child] = -1;
  }

  void init() {
    const int root = node_num_;
    double imbalance = 0.0;
    for (int u = 0; u < node_num_; ++u) imbalance += supply_[u];
    supply_[root] = -imbalance;
    parent_[root] = -1;
    pred_[root] = -1;
    depth_[root] = 0;
    pi_[root] = 0.0;
    for (int u = 0; u < node_num_; ++u) {
      const std::int64_t e = arc_num_ + u;
      parent_[u] = root;
      pred_[u] = e;
      depth_[u] = 1;
      attach(u, root);
      if (supply_[u] >= 0) {
        dir_[u] = kUp;
        pi_[u] = 0.0;
        flow_[e] = supply_[u];
        cost_[e] = 0.0;
      } else {
        dir_[u] = kDown;
        pi_[u] = art_cost_;
        flow_[e] = -supply_[u];
        cost_[e] = art_cost_;
      }
    }
    next_arc_ = 0;
  }

  double reduced(std::int64_t e) const {
    const int i = static_cast<int>(e / n2_);
    const int j = n1_ + static_cast<int>(e % n2_);
    return state_[e] * (cost_[e] + pi_[i] - pi_[j]);
  }

  bool find_entering_arc() {
    double best = -eps_;
    std::int64_t cnt = block_size_;
    std::int64_t e = next_arc_;
    in_arc_ = -1;
    for (std::int64_t k = 0; k < arc_num_; ++k) {
      const double c = reduced(e);
      if (c < best) {
        best = c;
        in_arc_ = e;
      }
      if (++e == arc_num_) e = 0;
      if (--cnt == 0) {
        if (in_arc_ >= 0) break;
        cnt = block_size_;
      }
    }
    if (in_arc_ < 0) return false;
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int a = arc_source(in_arc_);
    int b = arc_target(in_arc_);
    while (a != b) {
      if (depth_[a] >= depth_[b])
        a = parent_[a];
      else
        b = parent_[b];
    }
    join_ = a;
  }

  void find_leaving_arc() {
    // The entering arc is always at its lower bound, so flow is pushed
    // from its source to its target around the cycle.
    const int first = arc_source(in_arc_);
    const int second = arc_target(in_arc_);
    constexpr double inf = std::numeric_limits<double>::infinity();
    delta_ = inf;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      if (dir_[u] == kUp && flow_[pred_[u]] < delta_) {
        delta_ = flow_[pred_[u]];
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      if (dir_[u] == kDown && flow_[pred_[u]] <= delta_) {
        delta_ = flow_[pred_[u]];
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw std::logic_error("network simplex: unbounded pivot");
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
  }

  void change_flow() {
    if (delta_ > 0) {
      flow_[in_arc_] += delta_;
      for (int u = arc_source(in_arc_); u != join_; u = parent_[u])
        flow_[pred_[u]] -= dir_[u] * delta_;
      for (int u = arc_target(in_arc_); u != join_; u = parent_[u])
        flow_[pred_[u]] += dir_[u] * delta_;
    }
    const std::int64_t leaving = pred_[u_out_];
    flow_[leaving] = 0.0;
    if (leaving < arc_num_) state_[leaving] = kLower;
    state_[in_arc_] = kTree;
    ++pivots_;
  }

  // Re-hang the subtree cut off by the leaving arc below v_in. The stem
  // u_in -> ... -> u_out reverses its parent pointers.
  void update_tree() {
    stem_.clear();
    for (int u = u_in_;; u = parent_[u]) {
      stem_.push_back(u);
      if (u == u_out_) break;
    }
    for (int u : stem_) detach(u, parent_[u]);
    for (std::size_t k = stem_.size() - 1; k >= 1; --k) {
      const int u = stem_[k];
      const int below = stem_[k - 1];
      parent_[u] = below;
      pred_[u] = pred_[below];
      dir_[u] = -dir_[below];
      attach(u, below);
    }
    parent_[u_in_] = v_in_;
    pred_[u_in_] = in_arc_;
    dir_[u_in_] = (arc_source(in_arc_) == u_in_) ? kUp : kDown;
    attach(u_in_, v_in_);

    // Depth and potentials of the moved subtree, recomputed from parents.
    dfs_.clear();
    dfs_.push_back(u_in_);
    while (!dfs_.empty()) {
      const int u = dfs_.back();
      dfs_.pop_back();
      const int p = parent_[u];
      depth_[u] = depth_[p] + 1;
      const double c = cost_[pred_[u]];
      pi_[u] = (dir_[u] == kUp) ? pi_[p] - c : pi_[p] + c;
      for (int ch = first_child_[u]; ch >= 0; ch = next_sib_[ch]) dfs_.push_back(ch);
    }
  }

  int n1_, n2_, node_num_;
  std::int64_t arc_num_;
  std::vector<double> supply_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<std::int8_t> state_;
  std::vector<int> parent_;
  std::vector<std::int64_t> pred_;
  std::vector<int> dir_;
  std::vector<int> depth_;
  std::vector<double> pi_;
  std::vector<int> first_child_, next_sib_, prev_sib_;
  std::vector<int> stem_, dfs_;

  double art_cost_ = 0.0;
  double eps_ = 0.0;
  std::int64_t block_size_ = 0;
  std::int64_t next_arc_ = 0;
  std::int64_t in_arc_ = -1;
  int join_ = -1, u_in_ = -1, v_in_ = -1, u_out_ = -1;
  double delta_ = 0.0;
  std::int64_t pivots_ = 0;
};

inline void check_pair(const PointCloud& source, const PointCloud& target, const char* who) {
  source.validate(who);
  target.validate(who);
  if (source.dim() != target.dim())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch (" +
                                std::to_string(source.dim()) + " vs " +
                                std::to_string(target.dim()) + ")");
}

inline double sq_dist(const PointCloud& a, Eigen::Index i, const PointCloud& b, Eigen::Index j) {
  return (a.points.row(i) - b.points.row(j)).squaredNorm();
}

inline TransportPlan finish_plan(Eigen::MatrixXd coupling, const PointCloud& source,
                                 const PointCloud& target) {
  TransportPlan plan;
  double cost = 0.0;
  for (Eigen::Index i = 0; i < coupling.rows(); ++i)
    for (Eigen::Index j = 0; j < coupling.cols(); ++j)
      if (coupling(i, j) != 0.0) cost += coupling(i, j) * sq_dist(source, i, target, j);
  plan.source_marginal = coupling.rowwise().sum();
  plan.target_marginal = coupling.colwise().sum().transpose();
  plan.coupling = std::move(coupling);
  plan.cost = cost;
  return plan;
}

}  // namespace detail

/// Exact squared 2-Wasserstein distance and an optimal coupling.
inline TransportPlan w2_squared(const PointCloud& source, const PointCloud& target) {
  detail::check_pair(source, target, "w2_squared");
  const auto n1 = source.size();
  const auto n2 = target.size();

  // One side is a single point: the coupling is forced.
  if (n1 == 1 || n2 == 1) {
    Eigen::MatrixXd coupling(n1, n2);
    if (n1 == 1)
      coupling.row(0) = target.weights.transpose();
    else
      coupling.col(0) = source.weights;
    return detail::finish_plan(std::move(coupling), source, target);
  }

  // Uniform weights are rescaled to integer supplies (n2 per source, n1 per
  // sink) so that every flow the simplex produces is exact.
  const bool integral = source.has_uniform_weights() && target.has_uniform_weights();
  std::vector<double> supply(static_cast<std::size_t>(n1));
  std::vector<double> demand(static_cast<std::size_t>(n2));
  double scale = 1.0;
  if (integral) {
    std::fill(supply.begin(), supply.end(), static_cast<double>(n2));
    std::fill(demand.begin(), demand.end(), static_cast<double>(n1));
    scale = static_cast<double>(n1) * static_cast<double>(n2);
  } else {
    for (Eigen::Index i = 0; i < n1; ++i) supply[i] = source.weights[i];
    for (Eigen::Index j = 0; j < n2; ++j) demand[j] = target.weights[j];
  }

  std::vector<double> cost(static_cast<std::size_t>(n1 * n2));
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      cost[static_cast<std::size_t>(i * n2 + j)] = detail::sq_dist(source, i, target, j);

  detail::BipartiteNetworkSimplex simplex(std::move(supply), std::move(demand), std::move(cost));
  simplex.solve();

  Eigen::MatrixXd coupling(n1, n2);
  for (Eigen::Index i = 0; i < n1; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      coupling(i, j) = simplex.flow(static_cast<int>(i), static_cast<int>(j)) / scale;
  return detail::finish_plan(std::move(coupling), source, target);
}

/// One-dimensional squared 2-Wasserstein distance by quantile matching.
inline double w2_squared_1d(const PointCloud& source, const PointCloud& target) {
  detail::check_pair(source, target, "w2_squared_1d");
  if (source.dim() != 1) throw std::invalid_argument("w2_squared_1d: clouds must be 1-dimensional");

  auto sorted = [](const PointCloud& c) {
    std::vector<std::pair<double, double>> v(static_cast<std::size_t>(c.size()));
    for (Eigen::Index i = 0; i < c.size(); ++i) v[i] = {c.points(i, 0), c.weights[i]};
    std::stable_sort(v.begin(), v.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return v;
  };
  const auto a = sorted(source);
  const auto b = sorted(target);

  std::size_t i = 0, j = 0;
  double ra = a[0].second, rb = b[0].second;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    const double diff = a[i].first - b[j].first;
    total += m * diff * diff;
    ra -= m;
    rb -= m;
    // The smaller slice is consumed exactly (x - x == 0).
    if (ra <= 0.0 && ++i < a.size()) ra = a[i].second;
    if (rb <= 0.0 && ++j < b.size()) rb = b[j].second;
  }
  return total;
}

/// Squared 2-Wasserstein distance from the uniform empirical distribution
/// on `values` to the Dirac at `anchor`. `paper_compat` returns the
/// unsquared, unnormalized sum of deviations instead.
inline double w2_squared_to_dirac(const std::vector<double>& values, double anchor,
                                  S2Mode mode = S2Mode::exact) {
  if (values.empty()) throw std::invalid_argument("w2_squared_to_dirac: empty input");
  double s = 0.0;
  if (mode == S2Mode::exact) {
    for (double y : values) s += (y - anchor) * (y - anchor);
    return s / static_cast<double>(values.size());
  }
  for (double y : values) s += y - anchor;
  return s;
}

/// Exhaustive minimum over permutations for equal-size uniform clouds. Test
/// oracle only; sizes above 8 are rejected.
inline double assignment_bruteforce(const PointCloud& source, const PointCloud& target) {
  detail::check_pair(source, target, "assignment_bruteforce");
  const auto m = source.size();
  if (target.size() != m)
    throw std::invalid_argument("assignment_bruteforce: clouds must have equal size");
  if (m > 8) throw std::invalid_argument("assignment_bruteforce: size " + std::to_string(m) +
                                         " exceeds the cap of 8");
  if (!source.has_uniform_weights() || !target.has_uniform_weights())
    throw std::invalid_argument("assignment_bruteforce: uniform weights required");

  Eigen::MatrixXd c(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = detail::sq_dist(source, i, target, j);

  std::vector<int> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(m);
}

}  // namespace wbo
