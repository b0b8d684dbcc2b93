#ifndef LPCA_BASELINES_HPP
#define LPCA_BASELINES_HPP

// Comparison methods: standard PCA and logistic SVD (Theta = 1 mu^T + A B^T).

#include "lpca/core.hpp"
#include "lpca/linalg.hpp"
#include "lpca/mm_solver.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace lpca {

// ---------------------------------------------------------------------------
// Standard PCA
// ---------------------------------------------------------------------------

struct PcaModel {
  Matrix U;   // d x k
  Vector mu;  // column means
};

inline PcaModel fit_pca(const Matrix& X, Index k) {
  detail::require(X.rows() >= 2, "fit_pca: need at least two rows");
  detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()),
                  "fit_pca: need 1 <= k <= min(n, d)");
  validate_data(X, Family::gaussian);
  Vector mu = column_means(X);
  const Matrix Xc = center(X, mu);
  const Matrix cov = Xc.transpose() * Xc / static_cast<double>(X.rows() - 1);
  return {top_eigenvectors(cov, k), std::move(mu)};
}

/// 1 mu^T + (X - 1 mu^T) U U^T
inline Matrix pca_reconstruction(const PcaModel& model, const Matrix& X) {
  detail::require(X.cols() == model.U.rows(), "pca_reconstruction: column count mismatch");
  Matrix out = (center(X, model.mu) * model.U) * model.U.transpose();
  out.rowwise() += model.mu.transpose();
  return out;
}

inline Matrix pca_scores(const PcaModel& model, const Matrix& X) {
  detail::require(X.cols() == model.U.rows(), "pca_scores: column count mismatch");
  return center(X, model.mu) * model.U;
}

inline constexpr double kPcaProbabilityFloor = 1e-10;

/// PCA reconstruction read as probabilities, clipped to [1e-10, 1 - 1e-10].
inline Matrix pca_probability_estimate(const PcaModel& model, const Matrix& X) {
  return pca_reconstruction(model, X).unaryExpr([](double v) {
    return std::clamp(v, kPcaProbabilityFloor, 1.0 - kPcaProbabilityFloor);
  });
}

/// Natural parameters implied by the clipped PCA probabilities.
inline Matrix pca_theta(const PcaModel& model, const Matrix& X) {
  return pca_probability_estimate(model, X).unaryExpr([](double p) { return logit(p); });
}

// ---------------------------------------------------------------------------
// Logistic SVD
// ---------------------------------------------------------------------------

struct LsvdModel {
  Matrix A;   // n x k scores, mutually orthogonal columns
  Matrix B;   // d x k loadings, orthonormal columns
  Vector mu;  // length d
  int k = 0;
};

struct LsvdFit {
  LsvdModel model;
  FitReport report;
};

inline Matrix lsvd_theta(const LsvdModel& model) {
  Matrix out = model.A * model.B.transpose();
  out.rowwise() += model.mu.transpose();
  return out;
}

/// Free parameters: main effects plus an orthonormal d x k frame.
inline double lpca_parameter_count(Index d, Index k) {
  return static_cast<double>(d + d * k) - static_cast<double>(k * (k + 1)) / 2.0;
}

/// Logistic SVD additionally estimates the n x k score matrix with
/// orthogonal columns: k n - k (k - 1) / 2 more parameters.
inline double lsvd_extra_parameters(Index n, Index k) {
  return static_cast<double>(k * n) - static_cast<double>(k * (k - 1)) / 2.0;
}

inline double lsvd_parameter_count(Index n, Index d, Index k) {
  return lpca_parameter_count(d, k) + lsvd_extra_parameters(n, k);
}

namespace detail {

// Rank-k truncated SVD of M written as A B^T with B orthonormal.
inline void truncated_factor(const Matrix& M, Index k, Matrix& A, Matrix& B) {
  B = top_right_singular_vectors(M, k);
  A = M * B;
}

}  // namespace detail

/// Majorization-minimization for logistic SVD. Each iteration forms working
/// variables at Theta = 1 mu^T + A B^T, sets mu to the column means of
/// Z - A B^T, then takes the rank-k truncated SVD of Z - 1 mu^T. The start
/// matches fit_lpca: B from the leading right singular vectors of Q and
/// A = (m Q - 1 mu^T) B.
inline LsvdFit fit_lsvd(const BinaryMatrix& X, const FitConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(cfg, X.cols(), true);
  const Index d = X.cols();
  const Index k = cfg.rank();
  const Matrix& x = X.values();
  const Matrix sat = saturate(X, cfg.m).values;

  Vector mu = cfg.include_mu ? initial_main_effects(x, Family::bernoulli, cfg.m) : Vector::Zero(d);
  Matrix B = detail::initial_loadings(sat, cfg, k);
  Matrix A = center(sat, mu) * B;

  LsvdModel model{std::move(A), std::move(B), std::move(mu), static_cast<int>(k)};
  Matrix theta = lsvd_theta(model);
  double dev = detail::average(bernoulli_deviance(x, theta), x);
  FitReport report;
  report.deviance_trace.push_back(dev);
  report.best_trace.push_back(dev);

  for (int t = 1; t <= cfg.max_iter; ++t) {
    const Matrix Z = working_variables(x, theta);
    if (cfg.include_mu) model.mu = (Z - model.A * model.B.transpose()).colwise().mean().transpose();
    detail::truncated_factor(center(Z, model.mu), k, model.A, model.B);
    theta = lsvd_theta(model);
    if (!theta.allFinite()) throw NumericalError("fit_lsvd: non-finite natural parameters");
    const double next = detail::average(bernoulli_deviance(x, theta), x);
    report.deviance_trace.push_back(next);
    report.best_trace.push_back(std::min(report.best_trace.back(), next));
    report.iterations = t;
    const bool done = std::abs(dev - next) < cfg.tol;
    dev = next;
    if (done) {
      report.converged = true;
      break;
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

struct NewScoreOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
  double bound = 1e3;  // box on each coefficient
};

/// Scores of a new binary row under a fitted logistic SVD: the logistic
/// regression of x* on design B with offset mu,
///   a* = argmin sum_j [-x_j eta_j + log(1 + exp(eta_j))],  eta = mu + B a,
/// restricted to ||a||_inf <= bound. Newton directions are searched along a
/// projected path: halve until the objective decreases, and keep doubling
/// while it still decreases. Separable rows run out to the box.
inline Vector lsvd_new_scores(const LsvdModel& model, const Eigen::Ref<const Vector>& x,
                              const NewScoreOptions& opt = {}) {
  const Index d = model.B.rows();
  const Index k = model.B.cols();
  detail::require(x.size() == d, "lsvd_new_scores: expected " + std::to_string(d) + " entries");
  for (Index j = 0; j < d; ++j)
    detail::require(x(j) == 0.0 || x(j) == 1.0, "lsvd_new_scores: row must be binary");

  auto objective = [&](const Vector& a) {
    const Vector eta = model.mu + model.B * a;
    double total = 0.0;
    for (Index j = 0; j < d; ++j) total += 0.5 * bernoulli_unit_deviance(x(j), eta(j));
    return total;
  };
  auto clamp_box = [&](Vector a) {
    for (Index c = 0; c < k; ++c) a(c) = std::clamp(a(c), -opt.bound, opt.bound);
    return a;
  };

  Vector a = Vector::Zero(k);
  double f = objective(a);
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector eta = model.mu + model.B * a;
    Vector resid(d), w(d);  // p - x and p (1 - p), without cancellation
    for (Index j = 0; j < d; ++j) {
      const double p = sigmoid(eta(j)), q = sigmoid(-eta(j));
      resid(j) = x(j) == 1.0 ? -q : p;
      w(j) = p * q;
    }
    Vector grad = model.B.transpose() * resid;
    // Coordinates pinned at the box with the gradient pushing outward are inactive.
    Vector free_grad = grad;
    std::vector<Index> free;
    for (Index c = 0; c < k; ++c) {
      if ((a(c) >= opt.bound && grad(c) < 0.0) || (a(c) <= -opt.bound && grad(c) > 0.0))
        free_grad(c) = 0.0;
      else
        free.push_back(c);
    }
    if (free_grad.isZero(0.0)) break;

    // Newton step on the free coordinates only.
    const Index nf = static_cast<Index>(free.size());
    Matrix hess(nf, nf);
    Vector g(nf);
    for (Index r = 0; r < nf; ++r) {
      g(r) = free_grad(free[r]);
      for (Index c = 0; c < nf; ++c)
        hess(r, c) = (model.B.col(free[r]).array() * w.array() * model.B.col(free[c]).array()).sum();
    }
    const double scale = hess.diagonal().maxCoeff();
    Vector step_free = -g;
    if (scale > 0.0) {
      hess.diagonal().array() += 1e-12 * scale;
      step_free = hess.ldlt().solve(-g);
    }
    Vector dir = Vector::Zero(k);
    for (Index r = 0; r < nf; ++r) dir(free[r]) = step_free(r);
    if (!dir.allFinite()) {
      std::ostringstream msg;
      msg << "lsvd_new_scores: non-finite Newton direction at iteration " << it
          << " (|grad| = " << grad.norm() << ")";
      throw NumericalError(msg.str());
    }
    if (free_grad.norm() < opt.grad_tol) {
      // A vanishing gradient with a Newton step that does not shrink means the
      // infimum is at infinity (separation): follow the step out to the box.
      if (dir.norm() < 1e-3 * (1.0 + a.norm())) break;
      double reach = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c)
        if (dir(c) != 0.0)
          reach = std::min(reach, ((dir(c) > 0.0 ? opt.bound : -opt.bound) - a(c)) / dir(c));
      const Vector edge = clamp_box(a + reach * dir);
      const double f_edge = objective(edge);
      if (!(f_edge <= f) || edge == a) break;
      a = edge;
      f = f_edge;
      continue;
    }
    if (dir.dot(free_grad) >= 0.0) dir = -free_grad;

    double step = 1.0;
    Vector trial = clamp_box(a + dir);
    double f_trial = objective(trial);
    while (!(f_trial < f) && step > 1e-10) {
      step *= 0.5;
      trial = clamp_box(a + step * dir);
      f_trial = objective(trial);
    }
    if (!(f_trial < f)) break;
    for (;;) {
      const Vector longer = clamp_box(a + 2.0 * step * dir);
      if (longer == trial) break;
      const double f_longer = objective(longer);
      if (!(f_longer < f_trial)) break;
      step *= 2.0;
      trial = longer;
      f_trial = f_longer;
    }
    if (!std::isfinite(f_trial)) throw NumericalError("lsvd_new_scores: non-finite objective");
    a = std::move(trial);
    f = f_trial;
  }
  return a;
}

/// Scores for every row of X_new.
inline Matrix lsvd_new_scores(const LsvdModel& model, const BinaryMatrix& X_new,
                              const NewScoreOptions& opt = {}) {
  detail::require(X_new.cols() == model.B.rows(), "lsvd_new_scores: column count mismatch");
  Matrix out(X_new.rows(), model.B.cols());
  for (Index i = 0; i < X_new.rows(); ++i)
    out.row(i) = lsvd_new_scores(model, X_new.values().row(i).transpose(), opt).transpose();
  return out;
}

/// Natural parameters of new rows after re-solving their scores.
inline Matrix lsvd_predict_theta(const LsvdModel& model, const BinaryMatrix& X_new,
                                 const NewScoreOptions& opt = {}) {
  Matrix out = lsvd_new_scores(model, X_new, opt) * model.B.transpose();
  out.rowwise() += model.mu.transpose();
  return out;
}

}  // namespace lpca

#endif  // LPCA_BASELINES_HPP
