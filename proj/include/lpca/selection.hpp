#ifndef LPCA_SELECTION_HPP
#define LPCA_SELECTION_HPP

// Rank selection by deviance explained and cross-validation of the scale m.

#include "lpca/baselines.hpp"
#include "lpca/core.hpp"
#include "lpca/mm_solver.hpp"
#include "lpca/parallel.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace lpca {

enum class Method { lpca, lsvd, fantope, pca };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::lpca: return "lpca";
    case Method::lsvd: return "lsvd";
    case Method::fantope: return "fantope";
    case Method::pca: return "pca";
  }
  return "unknown";
}

inline Method method_from_string(std::string_view s) {
  if (s == "lpca") return Method::lpca;
  if (s == "lsvd") return Method::lsvd;
  if (s == "fantope") return Method::fantope;
  if (s == "pca") return Method::pca;
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Deviance explained
// ---------------------------------------------------------------------------

/// D(X; 1 mu^T) for the main-effects-only model.
inline double baseline_deviance(const Matrix& X, const Vector& baseline_mu,
                                Family f = Family::bernoulli) {
  detail::require(baseline_mu.size() == X.cols(), "baseline_deviance: length mismatch");
  return family_deviance(X, main_effects_theta(baseline_mu, X.rows()), f);
}

inline double checked_baseline(const Matrix& X, const Vector& baseline_mu, Family f) {
  const double d0 = baseline_deviance(X, baseline_mu, f);
  detail::require(d0 > 0.0, "deviance explained undefined: baseline deviance is zero");
  return d0;
}

/// 1 - D(X; theta) / D(X; 1 mu^T).
inline double deviance_explained(const Matrix& X, const Matrix& theta, const Vector& baseline_mu,
                                 Family f = Family::bernoulli) {
  const double d0 = checked_baseline(X, baseline_mu, f);
  return 1.0 - family_deviance(X, theta, f) / d0;
}

inline double deviance_explained(const Matrix& X, const LpcaModel& model,
                                 const Vector& baseline_mu) {
  return deviance_explained(X, predict_theta(model, X), baseline_mu, model.family);
}

/// (D_{k-1} - D_k) / D_0. Pass theta_km1 = nullopt for k = 1 (uses D_0).
/// Negative values mean the rank-k fit is worse than the rank-(k-1) one.
inline double marginal_deviance_explained(const Matrix& X, const Matrix& theta_k,
                                          const std::optional<Matrix>& theta_km1,
                                          const Vector& baseline_mu,
                                          Family f = Family::bernoulli) {
  const double d0 = checked_baseline(X, baseline_mu, f);
  const double prev = theta_km1 ? family_deviance(X, *theta_km1, f) : d0;
  return (prev - family_deviance(X, theta_k, f)) / d0;
}

struct PredictiveDeviance {
  double deviance = 0.0;
  /// 1 - deviance / D(X_new; own main effects).
  double fraction_explained = 0.0;
};

inline PredictiveDeviance predictive_deviance(const LpcaModel& model, const Matrix& X_new) {
  detail::require(X_new.cols() == model.U.rows(), "predictive_deviance: column count mismatch");
  const Matrix theta = predict_theta(model, X_new);
  const double dev = family_deviance(X_new, theta, model.family);
  const Vector own_mu = initial_main_effects(X_new, model.family, model.m);
  const double d0 = checked_baseline(X_new, own_mu, model.family);
  return {dev, 1.0 - dev / d0};
}

// ---------------------------------------------------------------------------
// Scree tables
// ---------------------------------------------------------------------------

struct ScreeRow {
  int k = 0;
  double cumulative = 0.0;  // fraction of deviance explained
  double marginal = 0.0;
  double deviance = 0.0;
};

struct ScreeTable {
  std::vector<ScreeRow> rows;
  double baseline_deviance = 0.0;
};

/// Smallest k whose cumulative fraction reaches gamma, if any.
inline std::optional<int> smallest_k_reaching(const ScreeTable& table, double gamma = 0.9) {
  for (const auto& row : table.rows)
    if (row.cumulative >= gamma) return row.k;
  return std::nullopt;
}

/// In-sample natural parameters of a rank-k fit by the given method.
inline Matrix fit_theta(const BinaryMatrix& X, Method method, FitConfig cfg, int* iterations = nullptr) {
  switch (method) {
    case Method::lpca: {
      auto fit = fit_lpca(X, cfg);
      if (iterations) *iterations = fit.report.iterations;
      return predict_theta(fit.model, X);
    }
    case Method::lsvd: {
      auto fit = fit_lsvd(X, cfg);
      if (iterations) *iterations = fit.report.iterations;
      return lsvd_theta(fit.model);
    }
    case Method::pca: {
      const auto model = fit_pca(X.values(), cfg.rank());
      if (iterations) *iterations = 0;
      return pca_theta(model, X.values());
    }
    case Method::fantope:
      break;
  }
  throw InvalidArgument("scree: method '" + std::string(to_string(method)) + "' not supported");
}

/// Fits ranks 1..k_max and reports cumulative and marginal fractions of the
/// Bernoulli deviance explained. With stop_at set, stops after the first rank
/// whose cumulative fraction exceeds it.
inline ScreeTable scree(const BinaryMatrix& X, Method method, int k_max, const FitConfig& base,
                        std::optional<double> stop_at = std::nullopt) {
  detail::require(k_max >= 1 && k_max <= X.cols(), "scree: need 1 <= k_max <= d");
  const Vector mu0 = initial_main_effects(X.values(), Family::bernoulli, base.m);
  ScreeTable table;
  table.baseline_deviance = checked_baseline(X.values(), mu0, Family::bernoulli);
  double prev = table.baseline_deviance;
  for (int k = 1; k <= k_max; ++k) {
    FitConfig cfg = base;
    cfg.k = k;
    const double dev = bernoulli_deviance(X, fit_theta(X, method, cfg));
    table.rows.push_back({k, 1.0 - dev / table.baseline_deviance,
                          (prev - dev) / table.baseline_deviance, dev});
    prev = dev;
    if (stop_at && table.rows.back().cumulative > *stop_at) break;
  }
  return table;
}

// ---------------------------------------------------------------------------
// Cross-validation for m
// ---------------------------------------------------------------------------

/// Seeded shuffle of the rows, cut into `folds` contiguous blocks.
/// Returns the fold index of each row.
inline std::vector<int> fold_assignment(Index n, int folds, std::uint64_t seed) {
  detail::require(folds >= 2, "cross-validation needs at least two folds");
  detail::require(n >= folds, "cross-validation needs at least as many rows as folds");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (Index pos = 0; pos < n; ++pos)
    fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] =
        static_cast<int>(pos * folds / n);
  return fold;
}

struct CvCell {
  double m = 0.0;
  std::vector<double> fold_deviance;
  double mean_deviance = 0.0;
};

struct CvResult {
  std::vector<CvCell> grid;  // in the order of the supplied m grid
  double chosen_m = 0.0;
  int folds = 0;
};

/// Picks the m with the smallest mean held-out deviance. Ties go to the
/// smallest m whatever the grid order.
inline double choose_m(const std::vector<CvCell>& grid) {
  detail::require(!grid.empty(), "empty m grid");
  const CvCell* best = &grid.front();
  for (const auto& cell : grid) {
    if (cell.mean_deviance < best->mean_deviance ||
        (cell.mean_deviance == best->mean_deviance && cell.m < best->m))
      best = &cell;
  }
  return best->m;
}

/// K-fold cross-validation of m for logistic PCA at a fixed rank. Each fold
/// is fitted on the remaining rows and scored by the Bernoulli deviance of
/// the projected natural parameters of its held-out rows.
inline CvResult cross_validate_m(const BinaryMatrix& X, int k, const std::vector<double>& m_grid,
                                 int folds, std::uint64_t seed, const FitConfig& base = {},
                                 unsigned threads = 1) {
  detail::require(!m_grid.empty(), "cross_validate_m: m grid is empty");
  for (double m : m_grid) detail::require(m > 0.0, "cross_validate_m: m values must be positive");
  const std::vector<int> fold = fold_assignment(X.rows(), folds, seed);

  std::vector<BinaryMatrix> train, test;
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> in, out;
    for (Index i = 0; i < X.rows(); ++i) (fold[static_cast<std::size_t>(i)] == f ? out : in).push_back(i);
    train.push_back(X.select_rows(in));
    test.push_back(X.select_rows(out));
  }

  CvResult result;
  result.folds = folds;
  result.grid.resize(m_grid.size());
  const std::size_t cells = m_grid.size() * static_cast<std::size_t>(folds);
  std::vector<double> dev(cells);
  parallel_for(cells, threads, [&](std::size_t c) {
    const std::size_t g = c / static_cast<std::size_t>(folds);
    const std::size_t f = c % static_cast<std::size_t>(folds);
    FitConfig cfg = base;
    cfg.k = k;
    cfg.m = m_grid[g];
    cfg.family = Family::bernoulli;
    const auto fit = fit_lpca(train[f], cfg);
    dev[c] = bernoulli_deviance(test[f], predict_theta(fit.model, test[f]));
  });
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    CvCell& cell = result.grid[g];
    cell.m = m_grid[g];
    cell.fold_deviance.assign(dev.begin() + static_cast<std::ptrdiff_t>(g * folds),
                              dev.begin() + static_cast<std::ptrdiff_t>((g + 1) * folds));
    cell.mean_deviance = std::accumulate(cell.fold_deviance.begin(), cell.fold_deviance.end(), 0.0) /
                         static_cast<double>(folds);
  }
  result.chosen_m = choose_m(result.grid);
  return result;
}

/// 0.5, 1.0, ..., 5.0
inline std::vector<double> default_m_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.5 * i);
  return grid;
}

}  // namespace lpca

#endif  // LPCA_SELECTION_HPP
