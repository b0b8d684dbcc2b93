#ifndef LPCA_FANTOPE_SOLVER_HPP
#define LPCA_FANTOPE_SOLVER_HPP

// Convex relaxation of logistic PCA: minimize the Bernoulli deviance of
//   Theta = 1 mu^T + (sat - 1 mu^T) H
// over the rank-k Fantope {H : 0 <= H <= I, tr H = k} with mu held fixed,
// using accelerated projected gradient steps
//   F_t = H_{t-1} + (t - 2)/(t + 1) (H_{t-1} - H_{t-2})
//   H_t = Proj(F_t - (G + G^T) / (2 L)),   L = ||sat - 1 mu^T||_F^2,
// where G is the unsymmetrized derivative.

#include "lpca/core.hpp"
#include "lpca/linalg.hpp"
#include "lpca/mm_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

namespace lpca {

struct FantopeModel {
  Matrix H;   // d x d, symmetric, eigenvalues in [0, 1], trace k
  Vector mu;  // length d
  double m = 0.0;
  double k = 0.0;
};

struct FantopeFit {
  FantopeModel model;
  FitReport report;
};

/// Unsymmetrized derivative 2 (P - X)^T (sat - 1 mu^T) at Theta(H), in
/// numerator layout: entry (a, b) is dD/dH_ba.
inline Matrix fantope_raw_gradient(const Matrix& X, const Matrix& sat, const Vector& mu,
                                   const Matrix& H) {
  detail::require_same_shape(X, sat, "fantope_gradient");
  detail::require(H.rows() == X.cols() && H.cols() == X.cols() && mu.size() == X.cols(),
                  "fantope_gradient: dimension mismatch");
  const Matrix sat_c = center(sat, mu);
  Matrix theta = sat_c * H;
  theta.rowwise() += mu.transpose();
  const Matrix resid = -response_residuals(X, theta);
  return 2.0 * resid.transpose() * sat_c;
}

inline Matrix symmetrize_gradient(const Matrix& G) {
  Matrix out = G + G.transpose();
  out.diagonal() -= G.diagonal();
  return out;
}

/// Gradient with respect to a symmetric H: G + G^T - diag(G).
inline Matrix fantope_gradient(const Matrix& X, const Matrix& sat, const Vector& mu,
                               const Matrix& H) {
  return symmetrize_gradient(fantope_raw_gradient(X, sat, mu, H));
}

/// ||sat - 1 mu^T||_F^2; zero means the objective does not depend on H.
inline double lipschitz_constant(const Matrix& sat, const Vector& mu) {
  detail::require(mu.size() == sat.cols(), "lipschitz_constant: dimension mismatch");
  const double L = center(sat, mu).squaredNorm();
  detail::require(L > 0.0, "lipschitz_constant: sat - 1 mu^T is zero (degenerate)");
  return L;
}

struct FantopeProjection {
  Matrix H;
  double nu = 0.0;
  Vector clipped;  // eigenvalues after clipping, descending
};

/// Euclidean projection of a symmetric matrix onto the rank-k Fantope. The
/// shift nu is found by bisection on sum_j min(max(lambda_j - nu, 0), 1) = k.
inline FantopeProjection fantope_project_detail(const Matrix& M, double k) {
  const Index d = M.rows();
  detail::require(M.rows() == M.cols(), "fantope_project: matrix must be square");
  detail::require(k > 0.0 && k <= static_cast<double>(d),
                  "fantope_project: need 0 < k <= d");
  const EigenPairs eig = symmetric_eigen(M);
  const Vector& lam = eig.values;
  auto clipped_sum = [&](double nu) {
    double s = 0.0;
    for (Index j = 0; j < d; ++j) s += std::clamp(lam(j) - nu, 0.0, 1.0);
    return s;
  };
  double lo = lam(d - 1) - k / static_cast<double>(d);
  double hi = lam(0);
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    nu = 0.5 * (lo + hi);
    const double s = clipped_sum(nu);
    if (std::abs(s - k) < 1e-10) break;
    if (s > k)
      lo = nu;
    else
      hi = nu;
  }
  Vector clipped(d);
  for (Index j = 0; j < d; ++j) clipped(j) = std::clamp(lam(j) - nu, 0.0, 1.0);
  Matrix H = eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
  H = 0.5 * (H + H.transpose());
  return {std::move(H), nu, std::move(clipped)};
}

inline Matrix fantope_project(const Matrix& M, double k) {
  return fantope_project_detail(M, k).H;
}

inline Matrix fantope_theta(const FantopeModel& model, const Matrix& sat) {
  return theta_from_operator(sat, model.mu, model.H);
}

inline double fantope_deviance(const FantopeModel& model, const BinaryMatrix& X) {
  return bernoulli_deviance(X, fantope_theta(model, saturate(X, model.m).values));
}

/// Loadings from the leading k eigenvectors of H.
inline LpcaModel fantope_to_projection(const FantopeModel& model, int k) {
  detail::require(k >= 1 && k <= model.H.rows(), "fantope_to_projection: need 1 <= k <= d");
  return LpcaModel{top_eigenvectors(model.H, k), model.mu, model.m, k, Family::bernoulli};
}

namespace detail {

// Starting inverse step: mean over entries of 1 / (element-wise second
// derivative of the deviance in H) at H0.
inline double adaptive_initial_lipschitz(const Matrix& sat_c,
                                         const Vector& mu, const Matrix& H0, double L_max) {
  Matrix theta = sat_c * H0;
  theta.rowwise() += mu.transpose();
  const Matrix P = fitted_probabilities(theta);
  const Matrix W = (P.array() * (1.0 - P.array())).matrix();
  // d2D / dH_ab^2 = 2 sum_i w_ib sat_c_ia^2
  const Matrix second = 2.0 * sat_c.array().square().matrix().transpose() * W;
  double mean_inverse = 0.0;
  for (Index j = 0; j < second.cols(); ++j)
    for (Index i = 0; i < second.rows(); ++i)
      mean_inverse += 1.0 / std::max(second(i, j), 1e-12);
  mean_inverse /= static_cast<double>(second.size());
  return std::clamp(1.0 / mean_inverse, 1e-12 * L_max, L_max);
}

}  // namespace detail

/// Accelerated projected gradient from a given starting point H0.
inline FantopeFit fit_fantope_from(const BinaryMatrix& X, const FitConfig& cfg,
                                   const Vector& mu, const Matrix& H0) {
  const auto start = std::chrono::steady_clock::now();
  validate_config(cfg, X.cols(), false);
  const Index d = X.cols();
  detail::require(mu.size() == d, "fit_fantope: main effects length mismatch");
  const Matrix& x = X.values();
  const Matrix sat = saturate(X, cfg.m).values;
  const Matrix sat_c = center(sat, mu);
  const double L_global = lipschitz_constant(sat, mu);
  const double nd = static_cast<double>(X.rows() * d);

  auto deviance_at = [&](const Matrix& H) {
    Matrix theta = sat_c * H;
    theta.rowwise() += mu.transpose();
    return bernoulli_deviance(x, theta);
  };
  auto raw_gradient = [&](const Matrix& H) {
    Matrix theta = sat_c * H;
    theta.rowwise() += mu.transpose();
    return Matrix(-2.0 * response_residuals(x, theta).transpose() * sat_c);
  };

  Matrix H_prev = fantope_project(H0, cfg.k);
  Matrix H = H_prev;
  Matrix best_H = H;
  double dev = deviance_at(H);
  double best = dev;
  FitReport report;
  report.deviance_trace.push_back(dev / nd);
  report.best_trace.push_back(best / nd);

  double L = cfg.backtracking ? detail::adaptive_initial_lipschitz(sat_c, mu, H, L_global)
                              : L_global;

  for (int t = 1; t <= cfg.max_iter; ++t) {
    const double momentum = (t - 2.0) / (t + 1.0);
    const Matrix F = H + momentum * (H - H_prev);
    const Matrix G = raw_gradient(F);
    // Frobenius gradient over symmetric matrices.
    const Matrix grad = 0.5 * (G + G.transpose());
    Matrix next;
    if (!cfg.backtracking) {
      next = fantope_project(F - grad / L, cfg.k);
    } else {
      const double f_F = deviance_at(F);
      for (;;) {
        next = fantope_project(F - grad / L, cfg.k);
        const Matrix step = next - F;
        const double model_value =
            f_F + (grad.array() * step.array()).sum() + 0.5 * L * step.squaredNorm();
        if (deviance_at(next) <= model_value + 1e-12 * std::abs(f_F) || L >= L_global) break;
        L = std::min(2.0 * L, L_global);
      }
    }
    H_prev = std::move(H);
    H = std::move(next);
    const double next_dev = deviance_at(H);
    if (!std::isfinite(next_dev)) throw NumericalError("fit_fantope: non-finite deviance");
    const double prev_best = best;
    if (next_dev < best) {
      best = next_dev;
      best_H = H;
    }
    report.deviance_trace.push_back(next_dev / nd);
    report.best_trace.push_back(best / nd);
    report.iterations = t;
    // The accelerated sequence is not monotone: stop only when the best value
    // has settled and the current iterate sits on it.
    const bool settled = (prev_best - best) / nd < cfg.tol && (next_dev - best) / nd < cfg.tol &&
                         std::abs(next_dev - dev) / nd < cfg.tol;
    dev = next_dev;
    if (settled) {
      report.converged = true;
      break;
    }
  }
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {FantopeModel{std::move(best_H), mu, cfg.m, cfg.k}, std::move(report)};
}

/// Fantope fit with mu fixed at clamp(logit colmean, +-m) (or zero) and H
/// started from U U^T (SVD of sat - 1 mu^T, random frame, or provided U).
inline FantopeFit fit_fantope(const BinaryMatrix& X, const FitConfig& cfg) {
  validate_config(cfg, X.cols(), false);
  const Index d = X.cols();
  const Vector mu = cfg.include_mu ? initial_main_effects(X.values(), Family::bernoulli, cfg.m)
                                   : Vector::Zero(d);
  const Matrix sat = saturate(X, cfg.m).values;
  const Index width = static_cast<Index>(std::ceil(cfg.k));
  const Matrix U = detail::initial_loadings(center(sat, mu), cfg, width);
  return fit_fantope_from(X, cfg, mu, U * U.transpose());
}

/// Solutions over a (k, m) grid. Within each k the m values are solved in
/// ascending order, each warm-started from the previous solution.
inline std::vector<std::vector<FantopeFit>> fantope_grid(const BinaryMatrix& X,
                                                         const std::vector<double>& k_grid,
                                                         std::vector<double> m_grid,
                                                         const FitConfig& base) {
  std::sort(m_grid.begin(), m_grid.end());
  std::vector<std::vector<FantopeFit>> out;
  for (double k : k_grid) {
    std::vector<FantopeFit> row;
    for (double m : m_grid) {
      FitConfig cfg = base;
      cfg.k = k;
      cfg.m = m;
      if (row.empty()) {
        row.push_back(fit_fantope(X, cfg));
      } else {
        const Vector mu = cfg.include_mu
                              ? initial_main_effects(X.values(), Family::bernoulli, m)
                              : Vector::Zero(X.cols());
        row.push_back(fit_fantope_from(X, cfg, mu, row.back().model.H));
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace lpca

#endif  // LPCA_FANTOPE_SOLVER_HPP
