#ifndef LPCA_MM_SOLVER_HPP
#define LPCA_MM_SOLVER_HPP

// Majorization-minimization for the projection formulation of logistic PCA.
//
// Each iteration replaces the deviance by the quadratic surrogate
//   b''_max * sum_ij (theta_ij - z_ij)^2 + const,
// with working variables z = theta + (x - b'(theta)) / b''_max, then
// minimizes the surrogate over mu (least squares) and over U (top-k
// eigenvectors of sat_c^T Z_c + Z_c^T sat_c - sat_c^T sat_c). Both steps
// decrease the surrogate, so the deviance is non-increasing.
//
// Bernoulli (b''_max = 1/4) and Gaussian (b''_max = 1) are supported. The
// Poisson cumulant has unbounded curvature, so no fixed quadratic majorizer
// exists and fit_lpca rejects it.

#include "lpca/core.hpp"
#include "lpca/linalg.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <vector>

namespace lpca {

struct LpcaModel {
  Matrix U;   // d x k, orthonormal, sign-canonical columns
  Vector mu;  // length d
  double m = 0.0;
  int k = 0;
  Family family = Family::bernoulli;
};

struct FitReport {
  /// Average deviance D / (n d) at the initial point and after each iteration.
  std::vector<double> deviance_trace;
  /// Running minimum of deviance_trace (only differs for non-monotone solvers).
  std::vector<double> best_trace;
  int iterations = 0;
  bool converged = false;
  double elapsed_seconds = 0.0;

  double final_deviance() const { return deviance_trace.back(); }
  double best_deviance() const { return best_trace.back(); }
};

struct LpcaFit {
  LpcaModel model;
  FitReport report;
};

/// Z = Theta + (X - b'(Theta)) / b''_max; for Bernoulli z = theta + 4 (x - sigma(theta)).
inline Matrix working_variables(const Matrix& X, const Matrix& theta,
                                Family f = Family::bernoulli) {
  detail::require_same_shape(X, theta, "working_variables");
  const double c = curvature_bound(f);
  detail::require(c > 0.0, "working_variables: family has no curvature bound");
  Matrix Z(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i)
      Z(i, j) = theta(i, j) + (X(i, j) - mean_value(f, theta(i, j))) / c;
  return Z;
}

/// Quadratic surrogate of the deviance built at theta0, evaluated at theta.
inline double majorizer(const Matrix& X, const Matrix& theta0, const Matrix& theta,
                        Family f = Family::bernoulli) {
  detail::require_same_shape(X, theta0, "majorizer");
  detail::require_same_shape(X, theta, "majorizer");
  const double c = curvature_bound(f);
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double t0 = theta0(i, j);
      const double delta = theta(i, j) - t0;
      total += unit_deviance(f, X(i, j), t0) +
               2.0 * (mean_value(f, t0) - X(i, j)) * delta + c * delta * delta;
    }
  }
  return total;
}

/// mu = (1/n) (Z - sat U U^T)^T 1.
inline Vector mm_update_mu(const Matrix& Z, const Matrix& sat, const Matrix& U) {
  detail::require_same_shape(Z, sat, "mm_update_mu");
  const Matrix proj = (sat * U) * U.transpose();
  return (Z - proj).colwise().mean().transpose();
}

/// Top-k eigenvectors of sat_c^T Z_c + Z_c^T sat_c - sat_c^T sat_c.
inline Matrix mm_update_U(const Matrix& sat_c, const Matrix& Z_c, Index k) {
  detail::require_same_shape(sat_c, Z_c, "mm_update_U");
  const Matrix cross = sat_c.transpose() * Z_c;
  const Matrix S = cross + cross.transpose() - sat_c.transpose() * sat_c;
  return top_eigenvectors(S, k);
}

namespace detail {

inline Matrix initial_loadings(const Matrix& sat_for_svd, const FitConfig& cfg, Index k) {
  const Index d = sat_for_svd.cols();
  switch (cfg.init) {
    case InitMethod::svd:
      return top_right_singular_vectors(sat_for_svd, k);
    case InitMethod::random: {
      std::mt19937_64 rng(cfg.seed);
      return random_orthonormal(d, k, rng);
    }
    case InitMethod::provided: {
      Matrix U = cfg.initial_loadings;
      require(orthonormality_error(U) <= 1e-8, "provided initial loadings are not orthonormal");
      return U;
    }
  }
  return {};
}

inline double average(double total, const Matrix& X) {
  return total / static_cast<double>(X.rows() * X.cols());
}

}  // namespace detail

inline LpcaFit fit_lpca(const Matrix& X, const FitConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  validate_data(X, cfg.family);
  validate_config(cfg, X.cols(), true);
  detail::require(curvature_bound(cfg.family) > 0.0,
                  "fit_lpca: the " + std::string(to_string(cfg.family)) +
                      " family has no global curvature bound; MM is unavailable");
  const Index d = X.cols();
  const Index k = cfg.rank();
  const Matrix sat = saturate(X, cfg.family, cfg.m).values;

  Vector mu = cfg.include_mu ? initial_main_effects(X, cfg.family, cfg.m) : Vector::Zero(d);
  Matrix U = detail::initial_loadings(sat, cfg, k);

  Matrix theta = assemble_theta(sat, mu, U);
  double dev = detail::average(family_deviance(X, theta, cfg.family), X);
  FitReport report;
  report.deviance_trace.push_back(dev);
  report.best_trace.push_back(dev);

  for (int t = 1; t <= cfg.max_iter; ++t) {
    const Matrix Z = working_variables(X, theta, cfg.family);
    if (cfg.include_mu) mu = mm_update_mu(Z, sat, U);
    const Matrix sat_c = center(sat, mu);
    const Matrix Z_c = center(Z, mu);
    U = mm_update_U(sat_c, Z_c, k);

    theta = (sat_c * U) * U.transpose();
    theta.rowwise() += mu.transpose();
    if (!theta.allFinite()) throw NumericalError("fit_lpca: non-finite natural parameters");
    const double next = detail::average(family_deviance(X, theta, cfg.family), X);
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
  return {LpcaModel{std::move(U), std::move(mu), cfg.m, static_cast<int>(k), cfg.family},
          std::move(report)};
}

inline LpcaFit fit_lpca(const BinaryMatrix& X, FitConfig cfg) {
  cfg.family = Family::bernoulli;
  return fit_lpca(X.values(), cfg);
}

/// (sat* - 1 mu^T) U: principal component scores of new rows.
inline Matrix scores(const LpcaModel& model, const Matrix& X_new) {
  detail::require(X_new.cols() == model.U.rows(),
                  "scores: expected " + std::to_string(model.U.rows()) +
                      " columns, got " + std::to_string(X_new.cols()));
  validate_data(X_new, model.family);
  const Matrix sat = saturate(X_new, model.family, model.m).values;
  return center(sat, model.mu) * model.U;
}

/// 1 mu^T + (sat* - 1 mu^T) U U^T.
inline Matrix predict_theta(const LpcaModel& model, const Matrix& X_new) {
  Matrix out = scores(model, X_new) * model.U.transpose();
  out.rowwise() += model.mu.transpose();
  return out;
}

inline Matrix scores(const LpcaModel& model, const BinaryMatrix& X_new) {
  return scores(model, X_new.values());
}

inline Matrix predict_theta(const LpcaModel& model, const BinaryMatrix& X_new) {
  return predict_theta(model, X_new.values());
}

/// Deviance of the model's reconstruction of X (in-sample or held out).
inline double model_deviance(const LpcaModel& model, const Matrix& X) {
  return family_deviance(X, predict_theta(model, X), model.family);
}

}  // namespace lpca

#endif  // LPCA_MM_SOLVER_HPP
