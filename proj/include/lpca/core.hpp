#ifndef LPCA_CORE_HPP
#define LPCA_CORE_HPP

// Shared data model and deviance kernels for exponential-family PCA.
//
// Conventions used across the library:
//   X      n x d data matrix (binary for the Bernoulli family)
//   Theta  n x d matrix of natural parameters
//   sat    n x d saturated natural parameters (m * (2X - 1) for Bernoulli)
//   mu     length-d main effects
//   U      d x k loadings with orthonormal columns
//
// Estimated natural parameters always have the projection form
//   Theta = 1 mu^T + (sat - 1 mu^T) U U^T.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace lpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised for malformed inputs and violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical kernel cannot produce a finite answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar kernels
// ---------------------------------------------------------------------------

/// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

/// Inverse logit.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// logit(p) clamped to [-m, m]; handles p in {0, 1}.
inline double clamped_logit(double p, double m) {
  if (p <= 0.0) return -m;
  if (p >= 1.0) return m;
  return std::clamp(logit(p), -m, m);
}

/// Per-entry Bernoulli deviance -2 x t + 2 log(1 + e^t), rewritten as
/// 2 [x log(1 + e^-t) + (1 - x) log(1 + e^t)] so it never cancels.
inline double bernoulli_unit_deviance(double x, double t) {
  double out = 0.0;
  if (x != 0.0) out += x * log1pexp(-t);
  if (x != 1.0) out += (1.0 - x) * log1pexp(t);
  return 2.0 * out;
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

enum class Family { bernoulli, gaussian, poisson };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::bernoulli: return "bernoulli";
    case Family::gaussian: return "gaussian";
    case Family::poisson: return "poisson";
  }
  return "unknown";
}

inline Family family_from_string(std::string_view s) {
  if (s == "bernoulli" || s == "binomial") return Family::bernoulli;
  if (s == "gaussian" || s == "normal") return Family::gaussian;
  if (s == "poisson") return Family::poisson;
  throw InvalidArgument("unknown family '" + std::string(s) + "'");
}

/// Cumulant function b(theta).
inline double cumulant(Family f, double t) {
  switch (f) {
    case Family::bernoulli: return log1pexp(t);
    case Family::gaussian: return 0.5 * t * t;
    case Family::poisson: return std::exp(t);
  }
  return 0.0;
}

/// Mean function b'(theta).
inline double mean_value(Family f, double t) {
  switch (f) {
    case Family::bernoulli: return sigmoid(t);
    case Family::gaussian: return t;
    case Family::poisson: return std::exp(t);
  }
  return 0.0;
}

/// Canonical link g = (b')^{-1}, clamped at -m / +m where the data sit on the
/// boundary of the mean space.
inline double clamped_link(Family f, double mean, double m) {
  switch (f) {
    case Family::bernoulli: return clamped_logit(mean, m);
    case Family::gaussian: return mean;
    case Family::poisson: return mean > 0.0 ? std::max(std::log(mean), -m) : -m;
  }
  return 0.0;
}

/// Saturated natural parameter of a single datum. Poisson zeros map to -m.
inline double saturated_value(Family f, double x, double m) {
  switch (f) {
    case Family::bernoulli: return m * (2.0 * x - 1.0);
    case Family::gaussian: return x;
    case Family::poisson: return x > 0.0 ? std::log(x) : -m;
  }
  return 0.0;
}

/// Global upper bound on b''(theta); zero when none exists.
inline double curvature_bound(Family f) {
  switch (f) {
    case Family::bernoulli: return 0.25;
    case Family::gaussian: return 1.0;
    case Family::poisson: return 0.0;
  }
  return 0.0;
}

inline void validate_data(const Matrix& X, Family f) {
  detail::require(X.rows() >= 1 && X.cols() >= 1, "data matrix must be non-empty");
  for (Index j = 0; j < X.cols(); ++j) {
    for (Index i = 0; i < X.rows(); ++i) {
      const double v = X(i, j);
      if (!std::isfinite(v)) {
        throw InvalidArgument("non-finite entry at row " + std::to_string(i) +
                              ", column " + std::to_string(j));
      }
      if (f == Family::bernoulli && v != 0.0 && v != 1.0) {
        throw InvalidArgument("binary data expected: entry at row " +
                              std::to_string(i) + ", column " +
                              std::to_string(j) + " is " + std::to_string(v));
      }
      if (f == Family::poisson && (v < 0.0 || v != std::floor(v))) {
        throw InvalidArgument("Poisson data must be nonnegative integers: row " +
                              std::to_string(i) + ", column " +
                              std::to_string(j));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// n x d matrix whose entries are exactly 0 or 1.
class BinaryMatrix {
 public:
  explicit BinaryMatrix(Matrix values) : values_(std::move(values)) {
    validate_data(values_, Family::bernoulli);
  }

  const Matrix& values() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  /// Rows selected by index, in the given order.
  BinaryMatrix select_rows(std::span<const Index> rows) const {
    Matrix out(static_cast<Index>(rows.size()), values_.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = values_.row(rows[r]);
    return BinaryMatrix(std::move(out));
  }

  BinaryMatrix transpose() const { return BinaryMatrix(values_.transpose()); }

 private:
  Matrix values_;
};

/// Saturated natural parameters together with the scale that produced them.
struct SaturatedParams {
  double m = 0.0;
  Matrix values;
};

enum class InitMethod { svd, random, provided };

struct FitConfig {
  /// Target dimension. Integer-valued for MM and logistic SVD; the Fantope
  /// solver accepts any 0 < k <= d.
  double k = 1.0;
  double m = 4.0;
  int max_iter = 1000;
  /// Threshold on the change in average deviance D / (n d).
  double tol = 1e-5;
  std::uint64_t seed = 0;
  InitMethod init = InitMethod::svd;
  bool include_mu = true;
  Family family = Family::bernoulli;
  /// d x k starting loadings when init == provided.
  Matrix initial_loadings;
  /// Fantope only: backtracking line search instead of the fixed 1/L step.
  bool backtracking = false;

  int rank() const { return static_cast<int>(k); }
};

/// Checks the config against a d-column data set.
inline void validate_config(const FitConfig& cfg, Index d, bool integer_k) {
  detail::require(cfg.m > 0.0 && std::isfinite(cfg.m), "m must be positive");
  detail::require(cfg.tol > 0.0, "tol must be positive");
  detail::require(cfg.max_iter >= 1, "max_iter must be at least 1");
  detail::require(cfg.k > 0.0 && cfg.k <= static_cast<double>(d),
                  "k must satisfy 0 < k <= d (k=" + std::to_string(cfg.k) +
                      ", d=" + std::to_string(d) + ")");
  if (integer_k) {
    detail::require(cfg.k == std::floor(cfg.k) && cfg.k >= 1.0,
                    "k must be a positive integer");
  }
  if (cfg.init == InitMethod::provided) {
    detail::require(cfg.initial_loadings.rows() == d &&
                        cfg.initial_loadings.cols() ==
                            static_cast<Index>(std::ceil(cfg.k)),
                    "initial loadings must be d x k");
  }
}

// ---------------------------------------------------------------------------
// Matrix kernels
// ---------------------------------------------------------------------------

/// Q = 2X - 1.
inline Matrix to_q(const BinaryMatrix& X) {
  return (2.0 * X.values().array() - 1.0).matrix();
}

inline SaturatedParams saturate(const Matrix& X, Family f, double m) {
  detail::require(m > 0.0, "m must be positive");
  SaturatedParams out{m, Matrix(X.rows(), X.cols())};
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) out.values(i, j) = saturated_value(f, X(i, j), m);
  return out;
}

inline SaturatedParams saturate(const BinaryMatrix& X, double m) {
  return saturate(X.values(), Family::bernoulli, m);
}

/// Sum of Bernoulli deviances. X may hold any values in [0, 1].
inline double bernoulli_deviance(const Matrix& X, const Matrix& theta) {
  detail::require_same_shape(X, theta, "bernoulli_deviance");
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) total += bernoulli_unit_deviance(X(i, j), theta(i, j));
  return total;
}

inline double bernoulli_deviance(const BinaryMatrix& X, const Matrix& theta) {
  return bernoulli_deviance(X.values(), theta);
}

inline double unit_deviance(Family f, double x, double t) {
  switch (f) {
    case Family::bernoulli: return bernoulli_unit_deviance(x, t);
    case Family::gaussian: return (x - t) * (x - t);
    case Family::poisson: {
      if (x < 0.0) throw InvalidArgument("negative Poisson datum");
      const double xlogx = x > 0.0 ? x * std::log(x) : 0.0;
      return 2.0 * (xlogx - x * t - x + std::exp(t));
    }
  }
  return 0.0;
}

inline double family_deviance(const Matrix& X, const Matrix& theta, Family f) {
  if (f == Family::bernoulli) return bernoulli_deviance(X, theta);
  detail::require_same_shape(X, theta, "family_deviance");
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) total += unit_deviance(f, X(i, j), theta(i, j));
  return total;
}

/// Mixed-type data: one family per column.
inline double family_deviance(const Matrix& X, const Matrix& theta,
                              std::span<const Family> per_column) {
  detail::require_same_shape(X, theta, "family_deviance");
  detail::require(static_cast<Index>(per_column.size()) == X.cols(),
                  "family_deviance: need one family per column");
  double total = 0.0;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i)
      total += unit_deviance(per_column[static_cast<std::size_t>(j)], X(i, j), theta(i, j));
  return total;
}

inline Matrix fitted_probabilities(const Matrix& theta) {
  return theta.unaryExpr([](double t) { return sigmoid(t); });
}

inline Matrix fitted_means(const Matrix& theta, Family f) {
  return theta.unaryExpr([f](double t) { return mean_value(f, t); });
}

/// X - b'(Theta). Bernoulli cells use 1 - sigmoid(t) = sigmoid(-t), which
/// keeps full relative accuracy when the fit is close.
inline Matrix response_residuals(const Matrix& X, const Matrix& theta, Family f = Family::bernoulli) {
  detail::require_same_shape(X, theta, "response_residuals");
  if (f != Family::bernoulli) return X - fitted_means(theta, f);
  return X.binaryExpr(theta, [](double x, double t) {
    return x == 1.0 ? sigmoid(-t) : x == 0.0 ? -sigmoid(t) : x - sigmoid(t);
  });
}

inline double orthonormality_error(const Matrix& U) {
  return (U.transpose() * U - Matrix::Identity(U.cols(), U.cols())).norm();
}

/// sat - 1 mu^T
inline Matrix center(const Matrix& sat, const Vector& mu) {
  return sat.rowwise() - mu.transpose();
}

/// 1 mu^T + (sat - 1 mu^T) H for any d x d matrix H.
inline Matrix theta_from_operator(const Matrix& sat, const Vector& mu, const Matrix& H) {
  Matrix out = center(sat, mu) * H;
  out.rowwise() += mu.transpose();
  return out;
}

/// 1 mu^T + (sat - 1 mu^T) U U^T.
inline Matrix assemble_theta(const Matrix& sat, const Vector& mu, const Matrix& U) {
  detail::require(U.cols() >= 1, "assemble_theta: loadings need at least one column");
  detail::require(U.rows() == sat.cols() && mu.size() == sat.cols(),
                  "assemble_theta: dimension mismatch");
  detail::require(orthonormality_error(U) <= 1e-8,
                  "assemble_theta: loadings are not orthonormal");
  Matrix out = (center(sat, mu) * U) * U.transpose();
  out.rowwise() += mu.transpose();
  return out;
}

inline Matrix assemble_theta(const SaturatedParams& sat, const Vector& mu, const Matrix& U) {
  return assemble_theta(sat.values, mu, U);
}

/// Column means.
inline Vector column_means(const Matrix& X) {
  return X.colwise().mean().transpose();
}

/// Main effects g(mean of column j), clamped to +-m.
inline Vector initial_main_effects(const Matrix& X, Family f, double m) {
  const Vector means = column_means(X);
  Vector mu(means.size());
  for (Index j = 0; j < means.size(); ++j) mu(j) = clamped_link(f, means(j), m);
  return mu;
}

/// Theta for a main-effects-only fit: every row equals mu.
inline Matrix main_effects_theta(const Vector& mu, Index n) {
  return mu.transpose().replicate(n, 1);
}

}  // namespace lpca

#endif  // LPCA_CORE_HPP
