#ifndef LPCA_LINALG_HPP
#define LPCA_LINALG_HPP

// Dense eigen helpers with a deterministic ordering and sign convention.

#include "lpca/core.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace lpca {

namespace detail {

inline Index argmax_abs(const Eigen::Ref<const Vector>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  return best;
}

}  // namespace detail

/// Flips columns so the largest-magnitude entry of each is positive (ties go
/// to the lowest index). Returns the applied signs.
inline Vector canonicalize_signs(Matrix& U) {
  Vector signs = Vector::Ones(U.cols());
  for (Index c = 0; c < U.cols(); ++c) {
    const Index i = detail::argmax_abs(U.col(c));
    if (U(i, c) < 0.0) {
      U.col(c) *= -1.0;
      signs(c) = -1.0;
    }
  }
  return signs;
}

struct EigenPairs {
  Vector values;   // descending
  Matrix vectors;  // matching columns, sign-canonical
};

/// Full eigendecomposition of a symmetric matrix, sorted by descending
/// eigenvalue. Exact ties are ordered by the lowest index of each vector's
/// largest-magnitude entry.
inline EigenPairs symmetric_eigen(const Matrix& S) {
  detail::require(S.rows() == S.cols(), "symmetric_eigen: matrix must be square");
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Index d = S.rows();
  Matrix vecs = es.eigenvectors();
  canonicalize_signs(vecs);
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<Index> lead(static_cast<std::size_t>(d));
  for (Index c = 0; c < d; ++c) lead[static_cast<std::size_t>(c)] = detail::argmax_abs(vecs.col(c));
  const Vector& vals = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (vals(a) != vals(b)) return vals(a) > vals(b);
    return lead[static_cast<std::size_t>(a)] < lead[static_cast<std::size_t>(b)];
  });
  EigenPairs out{Vector(d), Matrix(d, d)};
  for (Index c = 0; c < d; ++c) {
    out.values(c) = vals(order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

/// Leading k eigenvectors of a symmetric matrix.
inline Matrix top_eigenvectors(const Matrix& S, Index k) {
  detail::require(k >= 1 && k <= S.rows(), "top_eigenvectors: need 1 <= k <= d");
  return symmetric_eigen(S).vectors.leftCols(k);
}

/// Leading k right singular vectors of M (eigenvectors of M^T M).
inline Matrix top_right_singular_vectors(const Matrix& M, Index k) {
  return top_eigenvectors(M.transpose() * M, k);
}

/// Haar-distributed d x k orthonormal frame.
template <class Rng>
Matrix random_orthonormal(Index d, Index k, Rng& rng) {
  detail::require(k >= 1 && k <= d, "random_orthonormal: need 1 <= k <= d");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix G(d, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < d; ++i) G(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, k);
  const Matrix R = qr.matrixQR().topLeftCorner(k, k);
  for (Index j = 0; j < k; ++j)
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  return Q;
}

/// Sines of the principal angles between span(A) and span(B), largest first.
/// Both inputs must have orthonormal columns.
inline Vector principal_angle_sines(const Matrix& A, const Matrix& B) {
  const Matrix resid = B - A * (A.transpose() * B);
  Eigen::JacobiSVD<Matrix> svd(resid);
  return svd.singularValues();
}

}  // namespace lpca

#endif  // LPCA_LINALG_HPP
