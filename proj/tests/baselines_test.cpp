#include "lpca/baselines.hpp"
#include "lpca/mm_solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lpca;

TEST(FitPca, DiagonalCovarianceGivesOrderedBasisVectors) {
  std::mt19937_64 rng(61);
  Matrix X = oracle::random_normal(500, 3, rng);
  X.col(0) *= 0.5;
  X.col(1) *= 3.0;
  X.col(2) *= 1.5;
  // Remove sample cross-covariances so the covariance is exactly diagonal.
  X = X.rowwise() - X.colwise().mean();
  const Matrix Q = Eigen::HouseholderQR<Matrix>(X).householderQ() * Matrix::Identity(500, 3);
  const Vector scale = X.colwise().norm();
  X = Q * scale.asDiagonal();
  const PcaModel pca = fit_pca(X, 3);
  EXPECT_NEAR(std::abs(pca.U(1, 0)), 1.0, 1e-10);
  EXPECT_NEAR(std::abs(pca.U(2, 1)), 1.0, 1e-10);
  EXPECT_NEAR(std::abs(pca.U(0, 2)), 1.0, 1e-10);
}

TEST(FitPca, FullRankReconstructsExactly) {
  std::mt19937_64 rng(62);
  const Matrix X = oracle::random_normal(8, 4, rng);
  EXPECT_LE((pca_reconstruction(fit_pca(X, 4), X) - X).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FitPca, ReconstructionMatchesTruncatedSvdOracle) {
  std::mt19937_64 rng(63);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = oracle::random_normal(10, 4, rng);
    const Matrix Xc = X.rowwise() - X.colwise().mean();
    for (Index k = 1; k <= 3; ++k) {
      const Matrix V = oracle::power_right_singular(Xc, k);
      const Matrix want = Xc * V * V.transpose();
      const Matrix got = center(pca_reconstruction(fit_pca(X, k), X), X.colwise().mean().transpose());
      EXPECT_NEAR(oracle::mean_squared(Xc - got), oracle::mean_squared(Xc - want), 1e-10);
    }
  }
}

TEST(FitPca, Errors) {
  EXPECT_THROW(fit_pca(Matrix::Ones(1, 3), 1), InvalidArgument);
  EXPECT_THROW(fit_pca(Matrix::Ones(3, 2), 3), InvalidArgument);
}

TEST(PcaProbability, ClippingRule) {
  PcaModel model{Matrix::Zero(3, 1), Vector::Zero(3)};
  model.mu << 1.3, 0.5, -0.2;
  const Matrix p = pca_probability_estimate(model, Matrix::Zero(1, 3));
  EXPECT_EQ(p(0, 0), 1.0 - 1e-10);
  EXPECT_EQ(p(0, 1), 0.5);
  EXPECT_EQ(p(0, 2), 1e-10);
  EXPECT_TRUE(pca_theta(model, Matrix::Zero(1, 3)).allFinite());
}

TEST(ParameterCounts, LsvdExtraParameters) {
  for (Index n : {10, 100, 1000})
    for (Index d : {5, 50})
      for (Index k = 1; k <= 5; ++k)
        EXPECT_DOUBLE_EQ(lsvd_parameter_count(n, d, k) - lpca_parameter_count(d, k),
                         static_cast<double>(k * n - k * (k - 1) / 2));
  EXPECT_DOUBLE_EQ(lpca_parameter_count(50, 2), 50 + 100 - 3);
}

TEST(FitLsvd, MonotoneAndLowerInSampleDevianceThanLpca) {
  std::mt19937_64 rng(64);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Rank-one logit structure: theta_ij = a_i b_j.
  const Vector a = 2.0 * oracle::random_normal(40, 1, rng);
  const Vector b = oracle::random_normal(8, 1, rng);
  Matrix x(40, 8);
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 8; ++j) x(i, j) = unif(rng) < sigmoid(a(i) * b(j)) ? 1.0 : 0.0;
  const BinaryMatrix X(x);
  FitConfig cfg;
  cfg.k = 1;
  cfg.m = 4;
  const auto lsvd = fit_lsvd(X, cfg);
  const auto lpca = fit_lpca(X, cfg);
  const auto& tr = lsvd.report.deviance_trace;
  for (std::size_t t = 1; t < tr.size(); ++t) EXPECT_LE(tr[t], tr[t - 1] + 1e-10);
  EXPECT_LT(lsvd.report.final_deviance(), lpca.report.final_deviance());
  EXPECT_LT(orthonormality_error(lsvd.model.B), 1e-10);
  const Matrix AtA = lsvd.model.A.transpose() * lsvd.model.A;
  EXPECT_LT((AtA - Matrix(AtA.diagonal().asDiagonal())).norm(), 1e-8 * AtA.norm() + 1e-12);
}

TEST(FitLsvd, FullRankDrivesDevianceDown) {
  std::mt19937_64 rng(65);
  const BinaryMatrix X(oracle::random_binary_varied(5, 3, rng, 0.3, 0.7));
  FitConfig cfg;
  cfg.k = 3;
  cfg.include_mu = false;
  cfg.max_iter = 200;
  cfg.tol = 1e-300;
  const auto fit = fit_lsvd(X, cfg);
  const auto& tr = fit.report.deviance_trace;
  ASSERT_EQ(tr.size(), 201u);
  for (std::size_t t = 1; t < tr.size(); ++t) EXPECT_LT(tr[t], tr[t - 1]);
  // The infimum is zero and is approached at roughly a 1/t rate.
  EXPECT_LT(tr.back(), 0.1 * tr.front());
  EXPECT_LT(tr[200], 0.6 * tr[100]);
}

TEST(FitLsvd, TransposeSymmetryWithoutMainEffects) {
  std::mt19937_64 rng(66);
  const BinaryMatrix X(oracle::random_binary_varied(12, 6, rng));
  FitConfig cfg;
  cfg.k = 2;
  cfg.include_mu = false;
  cfg.tol = 1e-13;
  cfg.max_iter = 20000;
  const auto fx = fit_lsvd(X, cfg);
  const auto ft = fit_lsvd(X.transpose(), cfg);
  // Theta^T of one fit is the Theta of the other (same optimum).
  const Matrix tx = lsvd_theta(fx.model);
  const Matrix tt = lsvd_theta(ft.model);
  EXPECT_NEAR(fx.report.final_deviance(), ft.report.final_deviance(), 1e-6);
  EXPECT_LT((tx.transpose() - tt).cwiseAbs().maxCoeff(), 1e-2);
  // Loadings of the transposed fit span the column space of the original scores.
  Eigen::HouseholderQR<Matrix> qr(fx.model.A);
  const Matrix Aorth = qr.householderQ() * Matrix::Identity(12, 2);
  EXPECT_LT(principal_angle_sines(Aorth, ft.model.B).maxCoeff(), 1e-2);
}

TEST(LsvdNewScores, DuplicatedTrainingRowDoesNoWorse) {
  std::mt19937_64 rng(67);
  const BinaryMatrix X(oracle::random_binary_varied(30, 6, rng));
  FitConfig cfg;
  cfg.k = 2;
  const auto fit = fit_lsvd(X, cfg);
  const Matrix theta = lsvd_theta(fit.model);
  for (Index i = 0; i < 30; ++i) {
    const Vector x = X.values().row(i).transpose();
    const Vector a = lsvd_new_scores(fit.model, x);
    const Vector eta = fit.model.mu + fit.model.B * a;
    EXPECT_LE(bernoulli_deviance(x, eta), bernoulli_deviance(x, theta.row(i).transpose()) + 1e-6);
  }
}

TEST(LsvdNewScores, SeparableRowHitsTheBox) {
  LsvdModel model{Matrix::Zero(1, 1), Matrix::Zero(4, 1), Vector::Zero(4), 1};
  model.B(0, 0) = 1.0;
  Vector x = Vector::Ones(4);
  const Vector a = lsvd_new_scores(model, x);
  EXPECT_DOUBLE_EQ(a(0), 1e3);
}

TEST(LsvdNewScores, StationaryStartStaysAtZero) {
  LsvdModel model{Matrix::Zero(1, 1), Matrix::Zero(2, 1), Vector::Zero(2), 1};
  model.B << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  Vector x(2);
  x << 1, 1;  // gradient B^T (p - x) = B^T (-0.5, -0.5) = 0
  EXPECT_EQ(lsvd_new_scores(model, x)(0), 0.0);
}

TEST(LsvdNewScores, MatchesGridOracleInOneDimension) {
  std::mt19937_64 rng(68);
  for (int rep = 0; rep < 10; ++rep) {
    LsvdModel model{Matrix::Zero(1, 1), oracle::gram_schmidt_frame(6, 1, rng),
                    0.5 * oracle::random_normal(6, 1, rng), 1};
    Vector x = oracle::random_binary(6, 1, rng);
    if (x.sum() == 0.0) x(0) = 1.0;
    if (x.sum() == 6.0) x(0) = 0.0;
    const Vector a = lsvd_new_scores(model, x);
    double best = std::numeric_limits<double>::infinity();
    for (double t = -40; t <= 40; t += 1e-3)
      best = std::min(best, bernoulli_deviance(x, model.mu + model.B * Vector::Constant(1, t)));
    const double got = bernoulli_deviance(x, model.mu + model.B * a);
    EXPECT_LE(got, best + 1e-9);
  }
}

TEST(LsvdNewScores, RejectsNonBinaryAndWrongLength) {
  LsvdModel model{Matrix::Zero(1, 1), Matrix::Identity(3, 1), Vector::Zero(3), 1};
  EXPECT_THROW(lsvd_new_scores(model, Vector::Constant(3, 0.5)), InvalidArgument);
  EXPECT_THROW(lsvd_new_scores(model, Vector::Ones(2)), InvalidArgument);
}

TEST(GaussianReduction, LpcaSpansPcaSubspace) {
  std::mt19937_64 rng(69);
  for (int rep = 0; rep < 5; ++rep) {
    const Matrix X = oracle::random_normal(25, 6, rng) * oracle::random_normal(6, 6, rng);
    FitConfig cfg;
    cfg.k = 3;
    cfg.family = Family::gaussian;
    cfg.tol = 1e-15;
    cfg.max_iter = 10000;
    const auto fit = fit_lpca(X, cfg);
    EXPECT_LT(principal_angle_sines(fit.model.U, fit_pca(X, 3).U).maxCoeff(), 1e-6);
  }
}
