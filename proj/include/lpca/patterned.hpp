#ifndef LPCA_PATTERNED_HPP
#define LPCA_PATTERNED_HPP

// Numerical checks of first-order optimality for the projection formulation
// and of the explicit solutions available for patterned data.
//
// Stationarity in U reads C U = U Lambda with
//   C = (X - P)^T (sat - 1 mu^T) + (sat - 1 mu^T)^T (X - P),
// and the only symmetric multiplier consistent with it is Lambda = U^T C U,
// so the residual is measured as ||C U - U (U^T C U)||_F.

#include "lpca/core.hpp"
#include "lpca/linalg.hpp"
#include "lpca/mm_solver.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace lpca {

/// C^m at (U, mu) for the model's scale m.
inline Matrix cm_matrix(const Matrix& X, const LpcaModel& model) {
  detail::require(X.cols() == model.U.rows(), "cm_matrix: column count mismatch");
  const Matrix sat_c = center(saturate(X, model.family, model.m).values, model.mu);
  Matrix theta = (sat_c * model.U) * model.U.transpose();
  theta.rowwise() += model.mu.transpose();
  const Matrix resid = response_residuals(X, theta, model.family);
  const Matrix half = resid.transpose() * sat_c;
  return half + half.transpose();
}

struct OptimalityReport {
  double stationarity_residual = 0.0;  // ||C U - U (U^T C U)||_F
  double mu_residual = 0.0;            // ||(I - U U^T)(X - P)^T 1||
  double ortho_residual = 0.0;         // ||U^T U - I||_F
  Matrix multiplier;                   // U^T C U
};

inline OptimalityReport optimality_residuals(const Matrix& X, const LpcaModel& model) {
  const Matrix C = cm_matrix(X, model);
  const Matrix& U = model.U;
  OptimalityReport out;
  out.multiplier = U.transpose() * C * U;
  out.stationarity_residual = (C * U - U * out.multiplier).norm();

  Matrix theta = predict_theta(model, X);
  const Vector col_resid = response_residuals(X, theta, model.family).colwise().sum().transpose();
  out.mu_residual = (col_resid - U * (U.transpose() * col_resid)).norm();
  out.ortho_residual = orthonormality_error(U);
  return out;
}

/// Deviance of 1 mu^T + (sat - 1 mu^T) U U^T for an arbitrary (not
/// necessarily orthonormal) U.
inline double deviance_at_loadings(const Matrix& X, const Matrix& sat, const Vector& mu,
                                   const Matrix& U, Family f = Family::bernoulli) {
  return family_deviance(X, theta_from_operator(sat, mu, U * U.transpose()), f);
}

/// dD/dU = -2 C U.
inline Matrix deviance_gradient_U(const Matrix& X, const LpcaModel& model) {
  return -2.0 * cm_matrix(X, model) * model.U;
}

/// dD/dmu = -2 (I - U U^T)(X - P)^T 1.
inline Vector deviance_gradient_mu(const Matrix& X, const LpcaModel& model) {
  const Matrix theta = predict_theta(model, X);
  const Vector r = response_residuals(X, theta, model.family).colwise().sum().transpose();
  return -2.0 * (r - model.U * (model.U.transpose() * r));
}

// ---------------------------------------------------------------------------
// Independence
// ---------------------------------------------------------------------------

/// Sample correlation of columns a and b; the raw covariance when either
/// column is constant.
inline double column_correlation(const Matrix& X, Index a, Index b) {
  const double n = static_cast<double>(X.rows());
  const double ma = X.col(a).mean();
  const double mb = X.col(b).mean();
  const double cov = X.col(a).dot(X.col(b)) / n - ma * mb;
  const double va = X.col(a).squaredNorm() / n - ma * ma;
  const double vb = X.col(b).squaredNorm() / n - mb * mb;
  if (va <= 0.0 || vb <= 0.0) return cov;
  return cov / std::sqrt(va * vb);
}

inline bool uncorrelated_with_rest(const Matrix& X, Index l, double tol = 1e-8) {
  for (Index j = 0; j < X.cols(); ++j)
    if (j != l && std::abs(column_correlation(X, l, j)) > tol) return false;
  return true;
}

inline bool pairwise_uncorrelated(const Matrix& X, double tol = 1e-8) {
  for (Index l = 0; l < X.cols(); ++l)
    if (!uncorrelated_with_rest(X, l, tol)) return false;
  return true;
}

/// 2 n m / (1 + e^m): the multiplier at U = e_l when column l has mean 1/2.
inline double independence_multiplier(Index n, double m) {
  return 2.0 * static_cast<double>(n) * m / (1.0 + std::exp(m));
}

struct IndependenceCheck {
  double column_mean = 0.0;
  bool uncorrelated = false;
  double stationarity_residual = 0.0;  // ||C e_l - e_l (e_l^T C e_l)||
  double gradient_norm = 0.0;          // ||C e_l||, the residual with multiplier 0
  double multiplier = 0.0;             // e_l^T C e_l
  double predicted_multiplier = 0.0;   // 2 n (m - mu_l Qbar_l) / (1 + e^m)
};

/// Optimality of U = e_l with main effects clamp(logit colmean, +-m).
inline IndependenceCheck independence_check(const BinaryMatrix& X, Index l, double m) {
  detail::require(l >= 0 && l < X.cols(), "independence_check: column out of range");
  const Index d = X.cols();
  const double n = static_cast<double>(X.rows());
  LpcaModel model{Matrix::Zero(d, 1), initial_main_effects(X.values(), Family::bernoulli, m), m, 1,
                  Family::bernoulli};
  model.U(l, 0) = 1.0;
  const OptimalityReport rep = optimality_residuals(X.values(), model);
  const Matrix C = cm_matrix(X.values(), model);

  IndependenceCheck out;
  out.column_mean = X.values().col(l).mean();
  out.uncorrelated = uncorrelated_with_rest(X.values(), l);
  out.stationarity_residual = rep.stationarity_residual;
  out.gradient_norm = C.col(l).norm();
  out.multiplier = rep.multiplier(0, 0);
  const double q_bar = 2.0 * out.column_mean - 1.0;
  out.predicted_multiplier = 2.0 * n * (m - model.mu(l) * q_bar) / (1.0 + std::exp(m));
  return out;
}

/// Deviance contributed by column j when it is fitted by its mean alone:
/// -2 n (p log p + (1 - p) log(1 - p)).
inline double mean_only_column_deviance(double p, Index n) {
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  return -2.0 * static_cast<double>(n) * (xlogx(p) + xlogx(1.0 - p));
}

struct OrderingReport {
  Index exhaustive_best = 0;        // argmin of deviance over U = e_j
  Index closest_to_half = 0;        // column with mean closest to 1/2
  std::vector<double> deviance;     // deviance at U = e_j, per j
  bool agree() const { return exhaustive_best == closest_to_half; }
};

/// Among the standard basis vectors, the one that lowers the deviance most
/// selects the column whose mean is closest to 1/2. Requires pairwise
/// uncorrelated columns. Ties (relative 1e-12) go to the lowest index.
inline OrderingReport theorem2_ordering(const BinaryMatrix& X, double m) {
  const Matrix& x = X.values();
  if (!pairwise_uncorrelated(x))
    throw InvalidArgument("theorem2_ordering: columns are not pairwise uncorrelated");
  const Index d = X.cols();
  const Vector mu = initial_main_effects(x, Family::bernoulli, m);
  const Matrix sat = saturate(X, m).values;
  OrderingReport out;
  out.deviance.resize(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    Matrix U = Matrix::Zero(d, 1);
    U(j, 0) = 1.0;
    out.deviance[static_cast<std::size_t>(j)] = bernoulli_deviance(x, assemble_theta(sat, mu, U));
  }
  auto near_tie = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
  };
  for (Index j = 1; j < d; ++j) {
    const double dj = out.deviance[static_cast<std::size_t>(j)];
    const double db = out.deviance[static_cast<std::size_t>(out.exhaustive_best)];
    if (dj < db && !near_tie(dj, db)) out.exhaustive_best = j;
  }
  const Vector means = column_means(x);
  for (Index j = 1; j < d; ++j) {
    const double gap = std::abs(means(j) - 0.5);
    const double best_gap = std::abs(means(out.closest_to_half) - 0.5);
    if (gap < best_gap && !near_tie(gap, best_gap)) out.closest_to_half = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Compound symmetry
// ---------------------------------------------------------------------------

struct CompoundSymmetryReport {
  bool compound_symmetric = false;
  double diagonal = 0.0;
  double off_diagonal = 0.0;
  /// The explicit solution is only established for d <= 4.
  bool applicable = false;
  double stationarity_residual = 0.0;  // at u = 1/sqrt(d) 1, mu = 0
  /// Affine coefficient of the fitted probabilities in the remaining q's:
  /// 0 for d = 2, sigma(m/3) - 1/2 for d = 3, (sigma(m/2) - 1/2)/2 for d = 4.
  double beta = 0.0;
  /// max |sigma(m/d sum_{l not in {j,k}} q_il) - 1/2 - beta sum q_il|.
  double affine_residual = 0.0;
  std::string message;
};

inline double compound_symmetry_beta(Index d, double m) {
  switch (d) {
    case 2: return 0.0;
    case 3: return sigmoid(m / 3.0) - 0.5;
    case 4: return 0.5 * (sigmoid(m / 2.0) - 0.5);
    default: return 0.0;
  }
}

/// With mu = 0 and Q^T Q compound symmetric, u = 1/sqrt(d) 1 is stationary
/// when d <= 4.
inline CompoundSymmetryReport compound_symmetry_check(const BinaryMatrix& X, double m) {
  const Index d = X.cols();
  const Matrix Q = to_q(X);
  const Matrix gram = Q.transpose() * Q;
  CompoundSymmetryReport out;
  out.diagonal = gram(0, 0);
  out.off_diagonal = d > 1 ? gram(0, 1) : 0.0;
  out.compound_symmetric = true;
  for (Index a = 0; a < d && out.compound_symmetric; ++a) {
    for (Index b = 0; b < d; ++b) {
      const double expect = a == b ? out.diagonal : out.off_diagonal;
      if (gram(a, b) != expect) {
        out.compound_symmetric = false;
        out.message = "Q^T Q is not compound symmetric: entry (" + std::to_string(a) + "," +
                      std::to_string(b) + ") = " + std::to_string(gram(a, b)) + ", expected " +
                      std::to_string(expect);
        break;
      }
    }
  }
  if (!out.compound_symmetric) return out;
  out.applicable = d >= 2 && d <= 4;
  if (!out.applicable) {
    out.message = "no explicit solution is known for d = " + std::to_string(d);
    return out;
  }
  const LpcaModel model{Matrix::Constant(d, 1, 1.0 / std::sqrt(static_cast<double>(d))),
                        Vector::Zero(d), m, 1, Family::bernoulli};
  out.stationarity_residual = optimality_residuals(X.values(), model).stationarity_residual;
  out.beta = compound_symmetry_beta(d, m);
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < d; ++j) {
      for (Index k = j + 1; k < d; ++k) {
        double rest = 0.0;
        for (Index l = 0; l < d; ++l)
          if (l != j && l != k) rest += Q(i, l);
        const double lhs = sigmoid(m / static_cast<double>(d) * rest);
        out.affine_residual = std::max(out.affine_residual, std::abs(lhs - 0.5 - out.beta * rest));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force rank-one oracle
// ---------------------------------------------------------------------------

struct GridOracleResult {
  Vector u;
  double deviance = 0.0;
  /// Largest deviance change between the best grid point and its neighbours.
  double resolution_bound = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// Rank-one deviance, written out independently of the solver kernels.
inline double rank_one_deviance(const Matrix& x, const Matrix& sat, const Vector& mu,
                                const Vector& u) {
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (Index j = 0; j < x.cols(); ++j) s += u(j) * (sat(i, j) - mu(j));
    for (Index j = 0; j < x.cols(); ++j) {
      const double t = mu(j) + u(j) * s;
      const double softplus = std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
      total += 2.0 * (softplus - x(i, j) * t);
    }
  }
  return total;
}

}  // namespace detail

/// Exhaustive search over unit vectors (angles on a grid of the given step)
/// for the rank-one projection with the smallest deviance. d must be 2 or 3;
/// mu defaults to zero.
inline GridOracleResult grid_oracle_rank1(const BinaryMatrix& X, double m, double angle_step = 0.005,
                                          std::optional<Vector> mu = std::nullopt) {
  const Index d = X.cols();
  detail::require(d == 2 || d == 3, "grid_oracle_rank1: only d = 2 or d = 3 is supported");
  detail::require(angle_step > 0.0, "grid_oracle_rank1: step must be positive");
  const Vector mu_v = mu ? *mu : Vector::Zero(d);
  detail::require(mu_v.size() == d, "grid_oracle_rank1: mu length mismatch");
  const Matrix& x = X.values();
  Matrix sat(x.rows(), d);
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < d; ++j) sat(i, j) = x(i, j) == 1.0 ? m : -m;

  const double pi = std::numbers::pi;
  GridOracleResult out;
  if (d == 2) {
    const int steps = static_cast<int>(std::ceil(pi / angle_step));
    std::vector<double> dev(static_cast<std::size_t>(steps));
    int best = 0;
    for (int a = 0; a < steps; ++a) {
      const double ang = a * angle_step;
      Vector u(2);
      u << std::cos(ang), std::sin(ang);
      dev[static_cast<std::size_t>(a)] = detail::rank_one_deviance(x, sat, mu_v, u);
      if (dev[static_cast<std::size_t>(a)] < dev[static_cast<std::size_t>(best)]) best = a;
    }
    out.evaluations = dev.size();
    out.deviance = dev[static_cast<std::size_t>(best)];
    out.u = Vector(2);
    out.u << std::cos(best * angle_step), std::sin(best * angle_step);
    // u and -u give the same projection, so the angle grid wraps around.
    const auto lo = static_cast<std::size_t>((best + steps - 1) % steps);
    const auto hi = static_cast<std::size_t>((best + 1) % steps);
    out.resolution_bound = std::max(std::abs(dev[lo] - out.deviance), std::abs(dev[hi] - out.deviance));
  } else {
    // Upper hemisphere: polar in [0, pi/2], azimuth in [0, 2 pi).
    const int n_polar = static_cast<int>(std::ceil(0.5 * pi / angle_step)) + 1;
    const int n_azim = static_cast<int>(std::ceil(2.0 * pi / angle_step));
    auto unit = [&](int p, int a) {
      const double polar = std::min(p * angle_step, 0.5 * pi);
      const double azim = a * angle_step;
      Vector u(3);
      u << std::sin(polar) * std::cos(azim), std::sin(polar) * std::sin(azim), std::cos(polar);
      return u;
    };
    Matrix dev(n_polar, n_azim);
    int bp = 0, ba = 0;
    for (int p = 0; p < n_polar; ++p) {
      for (int a = 0; a < n_azim; ++a) {
        dev(p, a) = detail::rank_one_deviance(x, sat, mu_v, unit(p, a));
        if (dev(p, a) < dev(bp, ba)) {
          bp = p;
          ba = a;
        }
      }
    }
    out.evaluations = static_cast<std::size_t>(n_polar) * static_cast<std::size_t>(n_azim);
    out.deviance = dev(bp, ba);
    out.u = unit(bp, ba);
    for (int dp = -1; dp <= 1; ++dp) {
      for (int da = -1; da <= 1; ++da) {
        const int p = bp + dp;
        if (p < 0 || p >= n_polar) continue;
        const int a = (ba + da + n_azim) % n_azim;
        out.resolution_bound = std::max(out.resolution_bound, std::abs(dev(p, a) - out.deviance));
      }
    }
  }
  return out;
}

}  // namespace lpca

#endif  // LPCA_PATTERNED_HPP
