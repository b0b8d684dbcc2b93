#include "lpca/fantope_solver.hpp"
#include "lpca/mm_solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lpca;

namespace {

// Random member of the rank-k Fantope: eigenvalues in [0, 1] summing to k.
Matrix random_fantope_member(Index d, double k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector lam(d);
  for (;;) {
    for (Index i = 0; i < d; ++i) lam(i) = unif(rng);
    lam *= k / lam.sum();
    if (lam.maxCoeff() <= 1.0) break;
  }
  const Matrix V = oracle::gram_schmidt_frame(d, d, rng);
  return V * lam.asDiagonal() * V.transpose();
}

void expect_in_fantope(const Matrix& H, double k) {
  EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  const oracle::Eig e = oracle::jacobi_eigen(H);
  EXPECT_GE(e.values.minCoeff(), -1e-8);
  EXPECT_LE(e.values.maxCoeff(), 1.0 + 1e-8);
  EXPECT_NEAR(H.trace(), k, 1e-6);
}

}  // namespace

TEST(FantopeGradient, VanishesAtPerfectFit) {
  std::mt19937_64 rng(41);
  const Matrix sat = 3.0 * oracle::random_normal(6, 4, rng);
  const Vector mu = oracle::random_normal(4, 1, rng);
  const Matrix H = random_fantope_member(4, 2.0, rng);
  const Matrix P = fitted_probabilities(theta_from_operator(sat, mu, H));
  EXPECT_LE(fantope_gradient(P, sat, mu, H).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FantopeGradient, ExactlySymmetric) {
  std::mt19937_64 rng(42);
  const BinaryMatrix X(oracle::random_binary(6, 4, rng));
  const Matrix sat = saturate(X, 4).values;
  const Matrix G = fantope_gradient(X.values(), sat, Vector::Zero(4), random_fantope_member(4, 2, rng));
  EXPECT_EQ(G, G.transpose());
}

TEST(FantopeGradient, MatchesFiniteDifferencesOverSymmetricMatrices) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 20; ++rep) {
    const BinaryMatrix X(oracle::random_binary(6, 4, rng));
    const Matrix sat = saturate(X, 4).values;
    const Vector mu = oracle::random_normal(4, 1, rng);
    const Matrix H = random_fantope_member(4, 2, rng);
    const Matrix grad = fantope_gradient(X.values(), sat, mu, H);
    const double h = 1e-6;
    for (Index a = 0; a < 4; ++a) {
      for (Index b = a; b < 4; ++b) {
        Matrix up = H, down = H;
        up(a, b) += h;
        down(a, b) -= h;
        if (a != b) {
          up(b, a) += h;
          down(b, a) -= h;
        }
        const double fd = (oracle::naive_deviance(X.values(), theta_from_operator(sat, mu, up)) -
                           oracle::naive_deviance(X.values(), theta_from_operator(sat, mu, down))) /
                          (2 * h);
        EXPECT_NEAR(grad(a, b), fd, 1e-4);
      }
    }
  }
}

TEST(FantopeProject, WaterFillingExamples) {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = 0.5;
  M(1, 1) = 0.3;
  const FantopeProjection p = fantope_project_detail(M, 1.0);
  EXPECT_NEAR(p.H(0, 0), 0.6, 1e-9);
  EXPECT_NEAR(p.H(1, 1), 0.4, 1e-9);
  EXPECT_NEAR(p.H(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(p.nu, -0.1, 1e-9);

  M(0, 0) = 2.0;
  M(1, 1) = 0.1;
  const Matrix H = fantope_project(M, 1.0);
  EXPECT_NEAR(H(0, 0), 1.0, 1e-9);
  EXPECT_NEAR(H(1, 1), 0.0, 1e-9);
}

TEST(FantopeProject, IdempotentOnMembers) {
  std::mt19937_64 rng(44);
  for (int rep = 0; rep < 30; ++rep) {
    const double k = 0.5 + rep % 4;
    const Matrix H = random_fantope_member(5, k, rng);
    EXPECT_LE((fantope_project(H, k) - H).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(FantopeProject, OutputsLieInFantope) {
  std::mt19937_64 rng(45);
  for (int rep = 0; rep < 30; ++rep) {
    const double k = 0.7 + 0.9 * (rep % 5);
    expect_in_fantope(fantope_project(oracle::random_symmetric(6, rng, 3.0), k), k);
  }
}

TEST(FantopeProject, IsTheNearestPointAmongRandomMembers) {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix M = oracle::random_symmetric(4, rng, 2.0);
    const Matrix P = fantope_project(M, 2.0);
    const double best = (M - P).norm();
    for (int t = 0; t < 200; ++t) EXPECT_GE((M - random_fantope_member(4, 2.0, rng)).norm(), best - 1e-9);
  }
}

TEST(FantopeProject, RejectsBadRank) {
  EXPECT_THROW(fantope_project(Matrix::Identity(3, 3), 4.0), InvalidArgument);
  EXPECT_THROW(fantope_project(Matrix::Identity(3, 3), 0.0), InvalidArgument);
}

TEST(LipschitzConstant, Examples) {
  const Matrix sat = Matrix::Constant(1, 1, 4.0);
  EXPECT_DOUBLE_EQ(lipschitz_constant(sat, Vector::Zero(1)), 16.0);
  Matrix rows(3, 2);
  rows << 1, -1, 1, -1, 1, -1;
  const Vector mu = rows.row(0).transpose();
  EXPECT_THROW(lipschitz_constant(rows, mu), InvalidArgument);
}

TEST(LipschitzConstant, BoundsGradientDifferences) {
  std::mt19937_64 rng(47);
  const BinaryMatrix X(oracle::random_binary(10, 5, rng));
  const Matrix sat = saturate(X, 3).values;
  const Vector mu = initial_main_effects(X.values(), Family::bernoulli, 3);
  const double L = lipschitz_constant(sat, mu);
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix H1 = random_fantope_member(5, 2, rng);
    const Matrix H2 = random_fantope_member(5, 2, rng);
    const double gap = (H1 - H2).norm();
    const Matrix raw1 = fantope_raw_gradient(X.values(), sat, mu, H1);
    const Matrix raw2 = fantope_raw_gradient(X.values(), sat, mu, H2);
    EXPECT_LE((raw1 - raw2).norm(), L * gap);
    EXPECT_LE((symmetrize_gradient(raw1) - symmetrize_gradient(raw2)).norm(), L * gap);
  }
}

TEST(FitFantope, IteratesStayInFantopeAndNonIntegerRankAccepted) {
  std::mt19937_64 rng(48);
  const BinaryMatrix X(oracle::random_binary_varied(20, 5, rng));
  FitConfig cfg;
  cfg.k = 1.5;
  cfg.m = 3.0;
  for (int iters : {1, 5, 40}) {
    cfg.max_iter = iters;
    const auto fit = fit_fantope(X, cfg);
    expect_in_fantope(fit.model.H, 1.5);
  }
}

TEST(FitFantope, LowerBoundsMmAndProjection) {
  std::mt19937_64 rng(49);
  for (int rep = 0; rep < 3; ++rep) {
    const BinaryMatrix X(oracle::random_binary_varied(25, 5, rng));
    FitConfig cfg;
    cfg.k = 2;
    cfg.m = 4;
    cfg.include_mu = false;
    cfg.tol = 1e-10;
    cfg.max_iter = 20000;
    const auto mm = fit_lpca(X, cfg);
    const auto fan = fit_fantope(X, cfg);
    const double nd = 125.0;
    const double f_dev = fantope_deviance(fan.model, X) / nd;
    const double proj_dev = model_deviance(fantope_to_projection(fan.model, 2), X.values()) / nd;
    EXPECT_LE(f_dev, mm.report.final_deviance() + 1e-6);
    EXPECT_LE(f_dev, proj_dev + 1e-6);
  }
}

TEST(FitFantope, ConvergenceGapWithinAcceleratedRate) {
  std::mt19937_64 rng(50);
  const BinaryMatrix X(oracle::random_binary_varied(15, 4, rng));
  FitConfig cfg;
  cfg.k = 2;
  cfg.m = 3;
  cfg.include_mu = false;
  cfg.tol = 1e-300;
  cfg.max_iter = 300;
  const auto fit = fit_fantope(X, cfg);
  const Vector mu = Vector::Zero(4);
  const Matrix sat = saturate(X, 3).values;
  const double L = lipschitz_constant(sat, mu);
  const Matrix U0 = top_right_singular_vectors(sat, 2);
  const double r2 = (U0 * U0.transpose() - fit.model.H).squaredNorm();
  const double nd = 60.0;
  const double best = fit.report.best_deviance() * nd;
  const auto& tr = fit.report.deviance_trace;
  for (std::size_t t = 1; t < tr.size(); ++t)
    EXPECT_LE(tr[t] * nd - best, 2.0 * L * r2 / ((t + 1.0) * (t + 1.0)) + 1e-9) << "t=" << t;
}

TEST(FitFantope, BacktrackingReachesTheSameOptimum) {
  std::mt19937_64 rng(51);
  const BinaryMatrix X(oracle::random_binary_varied(20, 5, rng));
  FitConfig cfg;
  cfg.k = 2;
  cfg.m = 4;
  cfg.tol = 1e-10;
  cfg.max_iter = 20000;
  const double plain = fit_fantope(X, cfg).report.best_deviance();
  cfg.backtracking = true;
  const auto bt = fit_fantope(X, cfg);
  EXPECT_NEAR(bt.report.best_deviance(), plain, 1e-5);
  expect_in_fantope(bt.model.H, 2);
}

TEST(FantopeToProjection, ExactProjectionKeepsDeviance) {
  std::mt19937_64 rng(52);
  const BinaryMatrix X(oracle::random_binary_varied(12, 4, rng));
  const Matrix U = oracle::gram_schmidt_frame(4, 2, rng);
  const Vector mu = initial_main_effects(X.values(), Family::bernoulli, 4);
  const FantopeModel fm{U * U.transpose(), mu, 4.0, 2.0};
  const LpcaModel lm = fantope_to_projection(fm, 2);
  EXPECT_NEAR(model_deviance(lm, X.values()), fantope_deviance(fm, X), 1e-9);
  EXPECT_LT(orthonormality_error(lm.U), 1e-12);

  const FantopeModel two{Matrix::Identity(2, 2) * 0.5, Vector::Zero(2), 4.0, 1.0};
  EXPECT_NEAR(fantope_to_projection(two, 1).U.norm(), 1.0, 1e-14);
}

TEST(Theorem5, ScaledIdentityDevianceDecreasesInM) {
  std::mt19937_64 rng(53);
  const BinaryMatrix X(oracle::random_binary(10, 6, rng));
  const double k = 2.0, d = 6.0, nd = 60.0;
  double prev = std::numeric_limits<double>::infinity();
  for (double m = 1; m <= 512; m *= 2) {
    const FantopeModel fm{Matrix::Identity(6, 6) * (k / d), Vector::Zero(6), m, k};
    const double dev = fantope_deviance(fm, X);
    EXPECT_NEAR(dev, bernoulli_deviance(X, to_q(X) * (m * k / d)), 1e-9 * std::max(1.0, dev));
    EXPECT_LT(dev, prev);
    prev = dev;
    if (m * k / d >= 30) {
      EXPECT_LT(dev, 1e-6 * nd);
    }
  }
}

TEST(FantopeGrid, WarmStartedSolutionsAreFeasible) {
  std::mt19937_64 rng(54);
  const BinaryMatrix X(oracle::random_binary_varied(15, 4, rng));
  FitConfig base;
  base.max_iter = 200;
  const auto grid = fantope_grid(X, {1.0, 2.5}, {4.0, 2.0, 3.0}, base);
  ASSERT_EQ(grid.size(), 2u);
  ASSERT_EQ(grid[0].size(), 3u);
  EXPECT_EQ(grid[0][0].model.m, 2.0);
  EXPECT_EQ(grid[0][2].model.m, 4.0);
  for (std::size_t r = 0; r < 2; ++r)
    for (const auto& fit : grid[r]) expect_in_fantope(fit.model.H, r == 0 ? 1.0 : 2.5);
}

TEST(FitFantope, ConvergedPointSatisfiesVariationalInequality) {
  // Convex problem: <grad f(H*), F - H*> >= 0 for every Fantope member F.
  std::mt19937_64 rng(52);
  const BinaryMatrix X(oracle::random_binary_varied(25, 6, rng));
  FitConfig cfg;
  cfg.k = 2.5;
  cfg.m = 3;
  cfg.tol = 1e-13;
  cfg.max_iter = 50000;
  const auto fit = fit_fantope(X, cfg);
  const Matrix sat = saturate(X, cfg.m).values;
  const Matrix G = fantope_raw_gradient(X.values(), sat, fit.model.mu, fit.model.H);
  const Matrix S = 0.5 * (G + G.transpose());
  double worst = 0.0;
  for (int r = 0; r < 200; ++r) {
    const Matrix F = random_fantope_member(6, 2.5, rng);
    worst = std::min(worst, (S.array() * (F - fit.model.H).array()).sum() / S.norm());
  }
  EXPECT_GT(worst, -1e-4);
}

TEST(FantopeRawGradient, NumeratorLayoutMatchesFiniteDifferences) {
  std::mt19937_64 rng(53);
  const Matrix X = oracle::random_binary(6, 4, rng);
  const Matrix sat = oracle::naive_saturated(X, 2.5);
  const Vector mu = oracle::random_normal(4, 1, rng);
  const Matrix H = random_fantope_member(4, 2, rng);
  const Matrix fd = oracle::central_difference(
      [&](const Matrix& G) { return oracle::naive_deviance(X, oracle::naive_theta_operator(sat, mu, G)); }, H,
      1e-6);
  EXPECT_LT((fantope_raw_gradient(X, sat, mu, H).transpose() - fd).cwiseAbs().maxCoeff(), 1e-5);
}
