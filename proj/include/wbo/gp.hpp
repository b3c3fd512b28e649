#pragma once

// Noise-free Gaussian-process regression with a Matern 3/2 kernel.
//
// Hyperparameters are fitted by maximizing the log marginal likelihood with
// multi-start projected gradient ascent over log lengthscales; the constant
// prior mean and the signal variance are profiled out in closed form. A
// diagonal nugget is only introduced when the Cholesky factorization of the
// kernel matrix fails, escalating through a fixed ladder.

#include "wbo/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wbo {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernel and mean hyperparameters. `lengthscales` has one entry
/// (isotropic) or one per input dimension (ARD).
struct GPHyperparams {
  Eigen::VectorXd lengthscales = Eigen::VectorXd::Ones(1);
  double signal_variance = 1.0;
  double mean_const = 0.0;
  double nugget = 0.0;

  double lengthscale() const { return lengthscales[0]; }

  static GPHyperparams isotropic(double lengthscale, double signal_variance,
                                 double mean_const = 0.0, double nugget = 0.0) {
    GPHyperparams h;
    h.lengthscales = Eigen::VectorXd::Constant(1, lengthscale);
    h.signal_variance = signal_variance;
    h.mean_const = mean_const;
    h.nugget = nugget;
    return h;
  }
};

struct GPConfig {
  int starts = 8;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 0;
  bool ard = false;
  double min_lengthscale = 1e-3;
  double max_lengthscale = 1e2;
  double min_signal_variance = 1e-6;
  double max_signal_variance = 1e6;
  std::vector<double> nugget_ladder{1e-10, 1e-8, 1e-6, 1e-4};
};

namespace detail {

inline constexpr double kSqrt3 = 1.7320508075688772935;

template <typename RowA, typename RowB>
inline double scaled_distance(const RowA& a, const RowB& b, const Eigen::VectorXd& ls) {
  double s = 0.0;
  if (ls.size() == 1) {
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double t = a[k] - b[k];
      s += t * t;
    }
    return std::sqrt(s) / ls[0];
  }
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double t = (a[k] - b[k]) / ls[k];
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace detail

/// sigma_f^2 (1 + sqrt(3) r/l) exp(-sqrt(3) r/l).
inline double matern32(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                       const Eigen::Ref<const Eigen::RowVectorXd>& x2, const GPHyperparams& h) {
  if (x.size() != x2.size()) throw std::invalid_argument("matern32: dimension mismatch");
  const double a = detail::kSqrt3 * detail::scaled_distance(x, x2, h.lengthscales);
  return h.signal_variance * (1.0 + a) * std::exp(-a);
}

/// Kernel matrix between the rows of A and the rows of B (no nugget).
inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const GPHyperparams& h) {
  if (A.cols() != B.cols()) throw std::invalid_argument("kernel_matrix: dimension mismatch");
  Eigen::MatrixXd K(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      const double a = detail::kSqrt3 * detail::scaled_distance(A.row(i), B.row(j), h.lengthscales);
      K(i, j) = h.signal_variance * (1.0 + a) * std::exp(-a);
    }
  return K;
}

/// Log marginal likelihood and its gradient. The gradient is ordered as
/// (d/d log l_k for each lengthscale, d/d log sigma_f^2, d/d c).
struct LmlEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  double nugget = 0.0;
};

namespace detail {

/// Cholesky of K + nugget I, escalating the nugget through the ladder when
/// the factorization fails. Starts at `first_nugget`.
inline std::optional<std::pair<Eigen::LLT<Eigen::MatrixXd>, double>> factorize(
    const Eigen::MatrixXd& K, double first_nugget, const std::vector<double>& ladder) {
  std::vector<double> tries{first_nugget};
  for (double v : ladder)
    if (v > first_nugget) tries.push_back(v);
  for (double nugget : tries) {
    Eigen::MatrixXd Kt = K;
    if (nugget > 0.0) Kt.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(Kt);
    if (llt.info() == Eigen::Success) {
      // LLT only reports failure on a non-positive pivot; also reject
      // non-finite factors.
      if (llt.matrixLLT().allFinite() && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0)
        return std::make_pair(std::move(llt), nugget);
    }
  }
  return std::nullopt;
}

inline std::string condition_message(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return "kernel matrix not positive definite after maximal nugget (eigenvalues in [" +
         std::to_string(ev.minCoeff()) + ", " + std::to_string(ev.maxCoeff()) + "])";
}

inline LmlEvaluation lml_impl(const GPHyperparams& h, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& Y, const std::vector<double>& ladder,
                              bool with_gradient) {
  const auto n = X.rows();
  const Eigen::MatrixXd K = kernel_matrix(X, X, h);
  auto fac = factorize(K, h.nugget, ladder);
  if (!fac) throw FitError(condition_message(K));
  const auto& llt = fac->first;

  const Eigen::VectorXd r = Y.array() - h.mean_const;
  const Eigen::VectorXd alpha = llt.solve(r);
  const Eigen::MatrixXd L = llt.matrixL();
  const double logdet = 2.0 * L.diagonal().array().log().sum();

  LmlEvaluation out;
  out.nugget = fac->second;
  out.value = -0.5 * r.dot(alpha) - 0.5 * logdet -
              0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  if (!with_gradient) return out;

  const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
  const auto n_ls = h.lengthscales.size();
  out.gradient.resize(n_ls + 2);

  // dK/dlog l_k = 3 sigma^2 exp(-a) (delta_k / l_k)^2 with a = sqrt(3) r.
  for (Eigen::Index k = 0; k < n_ls; ++k) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double rr = detail::scaled_distance(X.row(i), X.row(j), h.lengthscales);
        const double a = kSqrt3 * rr;
        double part;
        if (n_ls == 1) {
          part = rr * rr;
        } else {
          const double t = (X(i, k) - X(j, k)) / h.lengthscales[k];
          part = t * t;
        }
        g += W(i, j) * 3.0 * h.signal_variance * std::exp(-a) * part;
      }
    }
    out.gradient[k] = 0.5 * g;
  }
  out.gradient[n_ls] = 0.5 * (W.cwiseProduct(K)).sum();
  out.gradient[n_ls + 1] = alpha.sum();
  return out;
}

}  // namespace detail

/// -1/2 r' K~^-1 r - 1/2 log det K~ - n/2 log 2 pi with r = Y - c and
/// K~ = K + nugget I. If K~ is not factorizable the nugget escalates
/// through the default ladder; FitError when it is exhausted.
inline double log_marginal_likelihood(const GPHyperparams& h, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& Y) {
  return detail::lml_impl(h, X, Y, GPConfig{}.nugget_ladder, false).value;
}

inline LmlEvaluation log_marginal_likelihood_with_gradient(const GPHyperparams& h,
                                                           const Eigen::MatrixXd& X,
                                                           const Eigen::VectorXd& Y) {
  return detail::lml_impl(h, X, Y, GPConfig{}.nugget_ladder, true);
}

/// Fitted posterior. Immutable once built.
class GPModel {
 public:
  static constexpr double kVarianceFloor = 1e-10;

  GPModel(GPHyperparams h, Eigen::MatrixXd X, Eigen::VectorXd Y,
          const std::vector<double>& ladder = GPConfig{}.nugget_ladder)
      : h_(std::move(h)), X_(std::move(X)), Y_(std::move(Y)) {
    if (X_.rows() != Y_.size() || X_.rows() < 1)
      throw std::invalid_argument("GPModel: X and Y sizes differ");
    const Eigen::MatrixXd K = kernel_matrix(X_, X_, h_);
    auto fac = detail::factorize(K, h_.nugget, ladder);
    if (!fac) throw FitError(detail::condition_message(K));
    h_.nugget = fac->second;
    Eigen::MatrixXd Kt = K;
    Kt.diagonal().array() += h_.nugget;
    chol_ = fac->first.matrixL();
    const Eigen::VectorXd r = Y_.array() - h_.mean_const;
    alpha_ = fac->first.solve(r);
    // Two rounds of iterative refinement tighten interpolation on
    // ill-conditioned kernels.
    for (int it = 0; it < 2; ++it) alpha_ += fac->first.solve(r - Kt * alpha_);
    const double logdet = 2.0 * chol_.diagonal().array().log().sum();
    lml_ = -0.5 * r.dot(alpha_) - 0.5 * logdet -
           0.5 * static_cast<double>(X_.rows()) * std::log(2.0 * M_PI);
  }

  const GPHyperparams& hyperparams() const noexcept { return h_; }
  const Eigen::MatrixXd& X_train() const noexcept { return X_; }
  const Eigen::VectorXd& Y_train() const noexcept { return Y_; }
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
  double log_marginal_likelihood() const noexcept { return lml_; }
  int dim() const noexcept { return static_cast<int>(X_.cols()); }
  bool used_nugget() const noexcept { return h_.nugget > 0.0; }

  struct Prediction {
    double mean;
    double sd;
  };

  Prediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Eigen::MatrixXd pt = x;
    const auto batch = predict_batch(pt);
    return {batch.mean[0], batch.sd[0]};
  }

  struct BatchPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
  };

  /// Posterior mean and standard deviation at every row of P.
  BatchPrediction predict_batch(const Eigen::MatrixXd& P) const {
    if (P.cols() != X_.cols()) throw std::invalid_argument("predict: dimension mismatch");
    const Eigen::MatrixXd Ks = kernel_matrix(X_, P, h_);  // n x N
    BatchPrediction out;
    out.mean = (Ks.transpose() * alpha_).array() + h_.mean_const;
    const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(Ks);
    Eigen::ArrayXd var = h_.signal_variance - V.colwise().squaredNorm().transpose().array();
    // Variances at round-off level of the prior variance are reported as 0.
    var = (var > kVarianceFloor * h_.signal_variance).select(var, 0.0);
    out.sd = var.sqrt();
    return out;
  }

  /// FNV-1a over the model's numeric state; used to check read-only use.
  std::uint64_t state_hash() const {
    std::uint64_t hsh = 0xcbf29ce484222325ULL;
    auto feed = [&](const double* p, Eigen::Index count) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < static_cast<std::size_t>(count) * sizeof(double); ++i) {
        hsh ^= bytes[i];
        hsh *= 0x100000001b3ULL;
      }
    };
    feed(h_.lengthscales.data(), h_.lengthscales.size());
    feed(&h_.signal_variance, 1);
    feed(&h_.mean_const, 1);
    feed(&h_.nugget, 1);
    feed(X_.data(), X_.size());
    feed(Y_.data(), Y_.size());
    feed(chol_.data(), chol_.size());
    feed(alpha_.data(), alpha_.size());
    return hsh;
  }

 private:
  GPHyperparams h_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd Y_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  double lml_ = 0.0;
};

/// Result of fit_mle with optimizer diagnostics.
struct FitReport {
  std::vector<double> start_lml;  // LML at each multi-start initial point
  std::vector<int> iterations;
  double best_lml = -std::numeric_limits<double>::infinity();
};

namespace detail {

/// Closed-form optimal constant mean for fixed kernel hyperparameters.
inline double profile_mean(const GPHyperparams& h, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& Y, const std::vector<double>& ladder) {
  const Eigen::MatrixXd K = kernel_matrix(X, X, h);
  auto fac = factorize(K, h.nugget, ladder);
  if (!fac) throw FitError(condition_message(K));
  // Constant data: return it exactly so the residual is identically zero.
  if ((Y.array() == Y[0]).all()) return Y[0];
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(Y.size());
  const Eigen::VectorXd kinv1 = fac->first.solve(ones);
  return kinv1.dot(Y) / kinv1.sum();
}

// Log marginal likelihood as a function of the log lengthscales alone: the
// constant mean and the signal variance sit at their closed-form optima
// (the variance clamped to its box). At that point the LML's partial
// derivatives in c and log sigma_f^2 vanish, so the gradient below is the
// lengthscale block of the full LML gradient.
class ProfiledObjective {
 public:
  struct Eval {
    double value = 0.0;
    Eigen::VectorXd gradient;
    GPHyperparams h;
  };

  ProfiledObjective(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y, const GPConfig& cfg,
                    Eigen::Index n_ls)
      : X_(X), Y_(Y), cfg_(cfg), n_ls_(n_ls), n_(X.rows()) {
    sq_.resize(static_cast<std::size_t>(n_ls));
    for (auto& m : sq_) m = Eigen::MatrixXd::Zero(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (Eigen::Index j = 0; j < n_; ++j)
        for (Eigen::Index k = 0; k < X.cols(); ++k) {
          const double t = X(i, k) - X(j, k);
          sq_[static_cast<std::size_t>(n_ls == 1 ? 0 : k)](i, j) += t * t;
        }
    constant_ = (Y.array() == Y[0]).all();
  }

  double lower() const { return std::log(cfg_.min_lengthscale); }
  double upper() const { return std::log(cfg_.max_lengthscale); }

  void project(Eigen::VectorXd& v) const {
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = std::clamp(v[k], lower(), upper());
  }

  Eigen::VectorXd projected_gradient(const Eigen::VectorXd& v, const Eigen::VectorXd& g) const {
    Eigen::VectorXd pg = g;
    for (Eigen::Index k = 0; k < v.size(); ++k)
      if ((v[k] <= lower() && g[k] < 0.0) || (v[k] >= upper() && g[k] > 0.0)) pg[k] = 0.0;
    return pg;
  }

  // `sigma2_hint` is only used when the unit kernel needs a nugget.
  std::optional<Eval> eval(const Eigen::VectorXd& v, double sigma2_hint) const {
    Eval out;
    out.h.lengthscales = v.array().exp();
    out.h.nugget = 0.0;

    std::vector<Eigen::MatrixXd> scaled(sq_.size());
    Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n_, n_);
    for (std::size_t k = 0; k < sq_.size(); ++k) {
      const double l = out.h.lengthscales[static_cast<Eigen::Index>(k)];
      scaled[k] = sq_[k] / (l * l);
      r2 += scaled[k];
    }
    const Eigen::ArrayXXd a = kSqrt3 * r2.array().sqrt();
    const Eigen::ArrayXXd E = (-a).exp();
    const Eigen::MatrixXd R = ((1.0 + a) * E).matrix();

    Eigen::LLT<Eigen::MatrixXd> llt(R);
    const bool clean = llt.info() == Eigen::Success && llt.matrixLLT().allFinite() &&
                       llt.matrixLLT().diagonal().minCoeff() > 0.0;
    if (!clean) return with_nugget(std::move(out.h), sigma2_hint);

    const double n = static_cast<double>(n_);
    double c = Y_[0];
    if (!constant_) {
      const Eigen::VectorXd rinv1 = llt.solve(Eigen::VectorXd::Ones(n_));
      c = rinv1.dot(Y_) / rinv1.sum();
    }
    const Eigen::VectorXd res = Y_.array() - c;
    const Eigen::VectorXd beta = llt.solve(res);
    const double quad = res.dot(beta);
    const double q = quad / n;
    const double s2 = std::clamp(q > 0.0 && std::isfinite(q) ? q : cfg_.min_signal_variance,
                                 cfg_.min_signal_variance, cfg_.max_signal_variance);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.h.signal_variance = s2;
    out.h.mean_const = c;
    out.value = -0.5 * quad / s2 - 0.5 * (n * std::log(s2) + logdet) - 0.5 * n * std::log(2.0 * M_PI);

    // 1/2 tr(W dK) with W = alpha alpha' - K^-1 and dK/dlog l_k = 3 s2 E (S_k).
    const Eigen::MatrixXd Rinv = llt.solve(Eigen::MatrixXd::Identity(n_, n_));
    const Eigen::ArrayXXd M = (beta * beta.transpose() / s2 - Rinv).array() * E;
    out.gradient.resize(n_ls_);
    for (Eigen::Index k = 0; k < n_ls_; ++k)
      out.gradient[k] = 1.5 * (M * scaled[static_cast<std::size_t>(k)].array()).sum();
    return out;
  }

 private:
  // The unit kernel is not factorizable without a nugget, so the signal
  // variance has no closed form. Golden-section search in log sigma_f^2.
  std::optional<Eval> with_nugget(GPHyperparams h, double sigma2_hint) const {
    auto value_at = [&](double log_s2) -> std::optional<double> {
      GPHyperparams g = h;
      g.signal_variance = std::exp(log_s2);
      try {
        g.mean_const = profile_mean(g, X_, Y_, cfg_.nugget_ladder);
        return lml_impl(g, X_, Y_, cfg_.nugget_ladder, false).value;
      } catch (const FitError&) {
        return std::nullopt;
      }
    };
    auto score = [&](double x) { return value_at(x).value_or(-std::numeric_limits<double>::infinity()); };
    const double invphi = 0.6180339887498949;
    double lo = std::log(cfg_.min_signal_variance), hi = std::log(cfg_.max_signal_variance);
    double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
    double f1 = score(x1), f2 = score(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 >= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - invphi * (hi - lo);
        f1 = score(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + invphi * (hi - lo);
        f2 = score(x2);
      }
    }
    double best_x = f1 >= f2 ? x1 : x2;
    double best_f = std::max(f1, f2);
    const double hint = std::clamp(std::log(sigma2_hint), std::log(cfg_.min_signal_variance),
                                   std::log(cfg_.max_signal_variance));
    if (const double fh = score(hint); fh > best_f) {
      best_x = hint;
      best_f = fh;
    }
    if (!std::isfinite(best_f)) return std::nullopt;

    Eval out;
    out.h = std::move(h);
    out.h.signal_variance = std::exp(best_x);
    out.h.mean_const = profile_mean(out.h, X_, Y_, cfg_.nugget_ladder);
    const auto ev = lml_impl(out.h, X_, Y_, cfg_.nugget_ladder, true);
    out.value = ev.value;
    out.gradient = ev.gradient.head(n_ls_);
    out.h.nugget = 0.0;
    return out;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& Y_;
  const GPConfig& cfg_;
  Eigen::Index n_ls_;
  Eigen::Index n_;
  std::vector<Eigen::MatrixXd> sq_;
  bool constant_ = false;
};

}  // namespace detail

/// Maximum-likelihood fit. Each start draws (log l, log sigma_f^2)
/// uniformly over the box and runs projected gradient ascent with
/// Barzilai-Borwein steps and Armijo backtracking on the profiled
/// likelihood.
inline GPModel fit_mle(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                       const GPConfig& cfg = {}, FitReport* report = nullptr) {
  const auto n = X.rows();
  if (n < 2) throw std::invalid_argument("fit_mle: at least two observations required");
  if (Y.size() != n) throw std::invalid_argument("fit_mle: X and Y sizes differ");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if ((X.row(i) - X.row(j)).norm() <= 1e-12)
        throw FitError("fit_mle: duplicate training inputs at rows " + std::to_string(i) +
                       " and " + std::to_string(j));

  const Eigen::Index n_ls = cfg.ard ? X.cols() : 1;
  detail::ProfiledObjective obj(X, Y, cfg, n_ls);
  Rng rng(cfg.seed);

  FitReport local;
  FitReport& rep = report ? *report : local;
  rep = FitReport{};

  std::optional<detail::ProfiledObjective::Eval> best;

  for (int s = 0; s < cfg.starts; ++s) {
    Eigen::VectorXd v(n_ls);
    for (Eigen::Index k = 0; k < n_ls; ++k) v[k] = rng.uniform(obj.lower(), obj.upper());
    const double s2 = std::exp(
        rng.uniform(std::log(cfg.min_signal_variance), std::log(cfg.max_signal_variance)));

    GPHyperparams h0;
    h0.lengthscales = v.array().exp();
    h0.signal_variance = s2;
    try {
      h0.mean_const = detail::profile_mean(h0, X, Y, cfg.nugget_ladder);
      rep.start_lml.push_back(detail::lml_impl(h0, X, Y, cfg.nugget_ladder, false).value);
    } catch (const FitError&) {
      rep.start_lml.push_back(-std::numeric_limits<double>::infinity());
    }

    auto cur = obj.eval(v, s2);
    if (!cur) {
      rep.iterations.push_back(0);
      continue;
    }
    double step = 1.0 / std::max(1.0, cur->gradient.lpNorm<Eigen::Infinity>());
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
      const Eigen::VectorXd pg = obj.projected_gradient(v, cur->gradient);
      if (pg.lpNorm<Eigen::Infinity>() <= cfg.gradient_tolerance) break;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt) {
        Eigen::VectorXd cand = v + step * pg;
        obj.project(cand);
        const Eigen::VectorXd sv = cand - v;
        if (sv.lpNorm<Eigen::Infinity>() == 0.0) break;
        auto next = obj.eval(cand, cur->h.signal_variance);
        if (next && std::isfinite(next->value) && next->value >= cur->value + 1e-4 * pg.dot(sv)) {
          const double sy = sv.dot(next->gradient - cur->gradient);
          step = sy < 0.0 ? std::clamp(sv.squaredNorm() / -sy, 1e-10, 1e4)
                          : std::min(step * 2.0, 1e4);
          v = cand;
          cur = std::move(next);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    rep.iterations.push_back(it);
    if (!best || cur->value > best->value) best = std::move(cur);
  }

  if (!best) throw FitError("fit_mle: no start produced a factorizable kernel");
  rep.best_lml = best->value;
  return GPModel(best->h, X, Y, cfg.nugget_ladder);
}

}  // namespace wbo
