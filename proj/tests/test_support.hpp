#ifndef LPCA_TEST_SUPPORT_HPP
#define LPCA_TEST_SUPPORT_HPP

// Reference computations for the tests. Nothing here calls into the library
// under test, so agreement with these is an independent check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Seeded generators
// ---------------------------------------------------------------------------

inline Matrix random_binary(Index n, Index d, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution coin(p);
  Matrix X(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) X(i, j) = coin(rng) ? 1.0 : 0.0;
  return X;
}

/// Binary matrix with per-column success probabilities drawn uniformly from
/// [lo, hi], and no constant column.
inline Matrix random_binary_varied(Index n, Index d, std::mt19937_64& rng, double lo = 0.15,
                                   double hi = 0.85) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix X(n, d);
  for (Index j = 0; j < d; ++j) {
    const double p = lo + (hi - lo) * unif(rng);
    do {
      for (Index i = 0; i < n; ++i) X(i, j) = unif(rng) < p ? 1.0 : 0.0;
    } while (X.col(j).sum() == 0.0 || X.col(j).sum() == static_cast<double>(n));
  }
  return X;
}

inline Matrix random_normal(Index n, Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix M(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) M(i, j) = g(rng);
  return M;
}

inline Matrix random_symmetric(Index d, std::mt19937_64& rng, double scale = 1.0) {
  const Matrix M = random_normal(d, d, rng) * scale;
  return 0.5 * (M + M.transpose());
}

/// Orthonormal d x k frame by modified Gram-Schmidt on Gaussian columns.
inline Matrix gram_schmidt_frame(Index d, Index k, std::mt19937_64& rng) {
  Matrix U = random_normal(d, k, rng);
  for (Index c = 0; c < k; ++c) {
    for (Index p = 0; p < c; ++p) U.col(c) -= U.col(p).dot(U.col(c)) * U.col(p);
    U.col(c) /= U.col(c).norm();
  }
  return U;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

struct Eig {
  Vector values;   // descending
  Matrix vectors;  // columns
};

/// Cyclic Jacobi rotations for a symmetric matrix.
inline Eig jacobi_eigen(Matrix A, int sweeps = 100) {
  const Index d = A.rows();
  Matrix V = Matrix::Identity(d, d);
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Index p = 0; p < d; ++p)
      for (Index q = p + 1; q < d; ++q) off += A(p, q) * A(p, q);
    if (off < 1e-30 * std::max(1.0, A.squaredNorm())) break;
    for (Index p = 0; p < d; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Index r = 0; r < d; ++r) {
          const double arp = A(r, p), arq = A(r, q);
          A(r, p) = c * arp - sn * arq;
          A(r, q) = sn * arp + c * arq;
        }
        for (Index r = 0; r < d; ++r) {
          const double apr = A(p, r), aqr = A(q, r);
          A(p, r) = c * apr - sn * aqr;
          A(q, r) = sn * apr + c * aqr;
        }
        for (Index r = 0; r < d; ++r) {
          const double vrp = V(r, p), vrq = V(r, q);
          V(r, p) = c * vrp - sn * vrq;
          V(r, q) = sn * vrp + c * vrq;
        }
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return A(a, a) > A(b, b); });
  Eig out{Vector(d), Matrix(d, d)};
  for (Index c = 0; c < d; ++c) {
    out.values(c) = A(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = V.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

/// Leading k right singular vectors of M by block power iteration on M^T M.
inline Matrix power_right_singular(const Matrix& M, Index k, int iters = 2000) {
  const Matrix S = M.transpose() * M;
  std::mt19937_64 rng(12345);
  Matrix V = gram_schmidt_frame(S.rows(), k, rng);
  for (int it = 0; it < iters; ++it) {
    V = S * V;
    for (Index c = 0; c < k; ++c) {
      for (Index p = 0; p < c; ++p) V.col(c) -= V.col(p).dot(V.col(c)) * V.col(p);
      V.col(c) /= V.col(c).norm();
    }
  }
  return V;
}

/// ||A A^T - B B^T||_F for frames with orthonormal columns.
inline double projector_distance(const Matrix& A, const Matrix& B) {
  return (A * A.transpose() - B * B.transpose()).norm();
}

// ---------------------------------------------------------------------------
// Calculus
// ---------------------------------------------------------------------------

/// Central differences of f at x, entry by entry.
inline Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                 double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix y = x;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      y(i, j) = x(i, j) + h;
      const double up = f(y);
      y(i, j) = x(i, j) - h;
      const double down = f(y);
      y(i, j) = x(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Model quantities written from the definitions
// ---------------------------------------------------------------------------

/// -2 sum [x log p + (1 - x) log(1 - p)], p = 1 / (1 + exp(-theta)).
inline double naive_deviance(const Matrix& X, const Matrix& theta) {
  double total = 0.0;
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      const double p = 1.0 / (1.0 + std::exp(-theta(i, j)));
      total += X(i, j) == 1.0 ? -2.0 * std::log(p) : -2.0 * std::log(1.0 - p);
    }
  }
  return total;
}

inline Matrix naive_saturated(const Matrix& X, double m) {
  return X.unaryExpr([m](double x) { return x == 1.0 ? m : -m; });
}

/// 1 mu^T + (sat - 1 mu^T) U U^T, by explicit loops.
inline Matrix naive_theta(const Matrix& sat, const Vector& mu, const Matrix& U) {
  const Matrix P = U * U.transpose();
  Matrix out(sat.rows(), sat.cols());
  for (Index i = 0; i < sat.rows(); ++i) {
    for (Index j = 0; j < sat.cols(); ++j) {
      double v = mu(j);
      for (Index l = 0; l < sat.cols(); ++l) v += (sat(i, l) - mu(l)) * P(l, j);
      out(i, j) = v;
    }
  }
  return out;
}

/// 1 mu^T + (sat - 1 mu^T) H for an arbitrary d x d matrix H.
inline Matrix naive_theta_operator(const Matrix& sat, const Vector& mu, const Matrix& H) {
  Matrix out(sat.rows(), sat.cols());
  for (Index i = 0; i < sat.rows(); ++i) {
    for (Index j = 0; j < sat.cols(); ++j) {
      double v = mu(j);
      for (Index l = 0; l < sat.cols(); ++l) v += (sat(i, l) - mu(l)) * H(l, j);
      out(i, j) = v;
    }
  }
  return out;
}

inline double mean_squared(const Matrix& A) { return A.squaredNorm() / static_cast<double>(A.size()); }

}  // namespace oracle

#endif  // LPCA_TEST_SUPPORT_HPP
