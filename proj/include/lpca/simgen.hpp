#ifndef LPCA_SIMGEN_HPP
#define LPCA_SIMGEN_HPP

// Bernoulli mixture data, probability-recovery sweeps and the principal
// component regression experiment.

#include "lpca/baselines.hpp"
#include "lpca/core.hpp"
#include "lpca/mm_solver.hpp"
#include "lpca/parallel.hpp"
#include "lpca/selection.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace lpca {

/// Seed of the sub-stream with the given index (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct MixtureSpec {
  Index n = 100;
  Index d = 50;
  int k_true = 2;
  double pbar = 0.5;
  double phi = 1.0;
  std::uint64_t seed = 0;

  double alpha() const { return 2.0 * phi * pbar; }
  double beta() const { return 2.0 * phi * (1.0 - pbar); }
};

inline void validate_spec(const MixtureSpec& s) {
  detail::require(s.n >= 1 && s.d >= 1, "simulate: n and d must be positive");
  detail::require(s.k_true >= 1, "simulate: k must be at least 1");
  detail::require(s.pbar > 0.0 && s.pbar < 1.0, "simulate: pbar must lie in (0, 1)");
  detail::require(s.phi > 0.0 && std::isfinite(s.phi), "simulate: phi must be positive");
}

struct SimulatedDataset {
  BinaryMatrix X;
  Matrix P;                      // n x d true probabilities
  Matrix cluster_probabilities;  // d x k_true, column c is p_c
  std::vector<int> assignments;  // cluster of each row, 0-based
};

namespace detail {

// log of a Gamma(a, 1) draw. For a < 1 uses G(a) = G(a + 1) U^(1/a) in log
// space so that tiny shapes do not underflow to zero.
template <class Rng>
double log_gamma_draw(double a, Rng& rng) {
  if (a >= 1.0) return std::log(std::gamma_distribution<double>(a, 1.0)(rng));
  const double g = std::gamma_distribution<double>(a + 1.0, 1.0)(rng);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  while (u <= 0.0) u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return std::log(g) + std::log(u) / a;
}

}  // namespace detail

template <class Rng>
double beta_draw(double a, double b, Rng& rng) {
  const double la = detail::log_gamma_draw(a, rng);
  const double lb = detail::log_gamma_draw(b, rng);
  return sigmoid(la - lb);
}

inline SimulatedDataset simulate(const MixtureSpec& spec) {
  validate_spec(spec);
  std::mt19937_64 rng(spec.seed);
  const double a = spec.alpha();
  const double b = spec.beta();
  Matrix cluster_p(spec.d, spec.k_true);
  for (int c = 0; c < spec.k_true; ++c)
    for (Index j = 0; j < spec.d; ++j) cluster_p(j, c) = beta_draw(a, b, rng);

  std::uniform_int_distribution<int> pick(0, spec.k_true - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> assign(static_cast<std::size_t>(spec.n));
  Matrix P(spec.n, spec.d);
  Matrix X(spec.n, spec.d);
  for (Index i = 0; i < spec.n; ++i) {
    const int c = pick(rng);
    assign[static_cast<std::size_t>(i)] = c;
    P.row(i) = cluster_p.col(c).transpose();
    for (Index j = 0; j < spec.d; ++j) X(i, j) = unif(rng) < P(i, j) ? 1.0 : 0.0;
  }
  return {BinaryMatrix(std::move(X)), std::move(P), std::move(cluster_p), std::move(assign)};
}

/// ||P_hat - P||_F^2 / (n d)
inline double probability_mse(const Matrix& P_hat, const Matrix& P) {
  detail::require_same_shape(P_hat, P, "probability_mse");
  detail::require(P.size() > 0, "probability_mse: empty matrices");
  return (P_hat - P).squaredNorm() / static_cast<double>(P.size());
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepSpec {
  Index n = 100;
  Index d = 50;
  double pbar = 0.5;
  std::vector<int> k_true{2, 3, 5, 10};
  std::vector<double> phi{0.01, 1.0, 3.0};
  std::vector<int> k_hat{1, 3, 5, 10};
  std::vector<double> m_grid = default_m_grid();
  std::vector<Method> methods{Method::lpca, Method::lsvd};
  /// Adds an "lpca-cv" row per (scenario, k) with m chosen by K-fold CV.
  bool cross_validate = false;
  int folds = 5;
  std::uint64_t seed = 0;
  /// Solver settings; include_mu is overridden by the pbar rule.
  FitConfig base{};
  unsigned threads = 1;
};

struct SweepRow {
  Index n = 0;
  Index d = 0;
  int k_true = 0;
  double pbar = 0.0;
  double phi = 0.0;
  std::string method;
  int k = 0;
  double m = std::numeric_limits<double>::quiet_NaN();  // NaN where m does not apply
  double mse = 0.0;
  double deviance = 0.0;  // average deviance D / (n d)
  int iterations = 0;
  bool converged = false;
};

namespace detail {

struct SweepCell {
  std::size_t scenario = 0;
  Method method = Method::lpca;
  bool cv = false;
  int k = 0;
  double m = 0.0;
};

}  // namespace detail

/// Main effects are fitted unless pbar = 0.5.
inline bool sweep_includes_mu(double pbar) { return pbar != 0.5; }

inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  detail::require(!spec.k_true.empty() && !spec.phi.empty() && !spec.k_hat.empty(),
                  "sweep: empty scenario grid");
  for (int k : spec.k_hat)
    detail::require(k >= 1 && k <= spec.d, "sweep: estimated ranks must satisfy 1 <= k <= d");

  struct Scenario {
    int k_true;
    double phi;
  };
  std::vector<Scenario> scenarios;
  for (int kt : spec.k_true)
    for (double phi : spec.phi) scenarios.push_back({kt, phi});
  std::vector<SimulatedDataset> data;
  data.reserve(scenarios.size());
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    data.push_back(simulate({spec.n, spec.d, scenarios[s].k_true, spec.pbar, scenarios[s].phi,
                             derive_seed(spec.seed, s)}));

  std::vector<detail::SweepCell> cells;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (Method method : spec.methods) {
      for (int k : spec.k_hat) {
        if (method == Method::lpca) {
          for (double m : spec.m_grid) cells.push_back({s, method, false, k, m});
        } else {
          detail::require(method != Method::fantope, "sweep: fantope is not a sweep method");
          cells.push_back({s, method, false, k, spec.base.m});
        }
      }
    }
    if (spec.cross_validate)
      for (int k : spec.k_hat) cells.push_back({s, Method::lpca, true, k, 0.0});
  }

  std::vector<SweepRow> rows(cells.size());
  const std::uint64_t cell_seed_base = derive_seed(spec.seed, scenarios.size());
  parallel_for(cells.size(), spec.threads, [&](std::size_t c) {
    const detail::SweepCell& cell = cells[c];
    const SimulatedDataset& ds = data[cell.scenario];
    FitConfig cfg = spec.base;
    cfg.k = cell.k;
    cfg.m = cell.m;
    cfg.include_mu = sweep_includes_mu(spec.pbar);
    cfg.seed = derive_seed(cell_seed_base, c);

    SweepRow row;
    row.n = spec.n;
    row.d = spec.d;
    row.k_true = scenarios[cell.scenario].k_true;
    row.pbar = spec.pbar;
    row.phi = scenarios[cell.scenario].phi;
    row.method = std::string(to_string(cell.method));
    row.k = cell.k;

    Matrix theta;
    Matrix P_hat;
    switch (cell.method) {
      case Method::lpca: {
        if (cell.cv) {
          row.method = "lpca-cv";
          cfg.m = cross_validate_m(ds.X, cell.k, spec.m_grid, spec.folds, cfg.seed, cfg).chosen_m;
        }
        const auto fit = fit_lpca(ds.X, cfg);
        theta = predict_theta(fit.model, ds.X);
        P_hat = fitted_probabilities(theta);
        row.m = cfg.m;
        row.iterations = fit.report.iterations;
        row.converged = fit.report.converged;
        break;
      }
      case Method::lsvd: {
        const auto fit = fit_lsvd(ds.X, cfg);
        theta = lsvd_theta(fit.model);
        P_hat = fitted_probabilities(theta);
        row.iterations = fit.report.iterations;
        row.converged = fit.report.converged;
        break;
      }
      case Method::pca: {
        const auto model = fit_pca(ds.X.values(), cell.k);
        P_hat = pca_probability_estimate(model, ds.X.values());
        theta = P_hat.unaryExpr([](double p) { return logit(p); });
        row.converged = true;
        break;
      }
      case Method::fantope:
        break;
    }
    row.mse = probability_mse(P_hat, ds.P);
    row.deviance = bernoulli_deviance(ds.X, theta) / static_cast<double>(ds.X.values().size());
    rows[c] = std::move(row);
  });
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,d,k_true,pbar,phi,method,k,m,mse,deviance,iterations,converged\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.n << ',' << r.d << ',' << r.k_true << ',' << r.pbar << ',' << r.phi << ',' << r.method
       << ',' << r.k << ',';
    if (std::isnan(r.m))
      os << "NA";
    else
      os << r.m;
    os << ',' << r.mse << ',' << r.deviance << ',' << r.iterations << ',' << (r.converged ? 1 : 0)
       << '\n';
  }
}

// ---------------------------------------------------------------------------
// Principal component regression
// ---------------------------------------------------------------------------

struct PcrConfig {
  std::vector<Method> methods{Method::pca, Method::lpca, Method::lsvd};
  std::vector<int> k_grid{1, 2, 3, 4, 5};
  std::vector<double> snr_grid{1.0, 5.0, 10.0};
  std::uint64_t seed = 0;
  FitConfig base{};
};

struct PcrRow {
  std::string method;  // "null" for the intercept-only model
  int k = 0;
  double snr = 0.0;
  double mse_in = 0.0;
  double mse_out = 0.0;
  bool ridge = false;  // singular design, solved with a 1e-8 ridge
};

struct LeastSquaresFit {
  Vector coef;
  bool ridge = false;
};

/// Least squares of y on [1, S]; falls back to a 1e-8 ridge when the design
/// is rank deficient.
inline LeastSquaresFit regress_on_scores(const Matrix& S, const Vector& y) {
  detail::require(S.rows() == y.size(), "regress_on_scores: row count mismatch");
  Matrix design(S.rows(), S.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(S.cols()) = S;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  if (qr.rank() == design.cols()) return {qr.solve(y), false};
  Matrix gram = design.transpose() * design;
  gram.diagonal().array() += 1e-8;
  return {gram.ldlt().solve(design.transpose() * y), true};
}

inline double predict_mse(const Matrix& S, const Vector& coef, const Vector& y) {
  const Vector pred = (S * coef.tail(S.cols())).array() + coef(0);
  return (y - pred).squaredNorm() / static_cast<double>(y.size());
}

inline double sample_variance(const Vector& v) {
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size());
}

/// Responses y = X beta + e with beta ~ N(0, I) and var(e) set so that
/// var(X_train beta) / var(e) equals each SNR; PCR on the rank-k scores of
/// each method, scored in and out of sample.
inline std::vector<PcrRow> pcr_experiment(const BinaryMatrix& X_train, const BinaryMatrix& X_test,
                                          const PcrConfig& cfg) {
  detail::require(X_train.cols() == X_test.cols(), "pcr_experiment: column count mismatch");
  detail::require(!cfg.snr_grid.empty(), "pcr_experiment: empty SNR grid");
  for (double snr : cfg.snr_grid) detail::require(snr > 0.0, "pcr_experiment: SNR must be positive");
  const Index d = X_train.cols();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector beta(d);
  for (Index j = 0; j < d; ++j) beta(j) = normal(rng);
  const Vector signal_train = X_train.values() * beta;
  const Vector signal_test = X_test.values() * beta;
  const double signal_var = sample_variance(signal_train);
  detail::require(signal_var > 0.0, "pcr_experiment: X beta has zero variance");

  std::vector<Vector> y_train, y_test;
  for (double snr : cfg.snr_grid) {
    const double sd = std::sqrt(signal_var / snr);
    Vector a = signal_train, b = signal_test;
    for (Index i = 0; i < a.size(); ++i) a(i) += sd * normal(rng);
    for (Index i = 0; i < b.size(); ++i) b(i) += sd * normal(rng);
    y_train.push_back(std::move(a));
    y_test.push_back(std::move(b));
  }

  std::vector<PcrRow> rows;
  for (std::size_t s = 0; s < cfg.snr_grid.size(); ++s) {
    const double mean = y_train[s].mean();
    rows.push_back({"null", 0, cfg.snr_grid[s], sample_variance(y_train[s]),
                    (y_test[s].array() - mean).square().mean(), false});
  }
  for (Method method : cfg.methods) {
    for (int k : cfg.k_grid) {
      FitConfig fc = cfg.base;
      fc.k = k;
      Matrix s_train, s_test;
      switch (method) {
        case Method::pca: {
          const auto model = fit_pca(X_train.values(), k);
          s_train = pca_scores(model, X_train.values());
          s_test = pca_scores(model, X_test.values());
          break;
        }
        case Method::lpca: {
          const auto fit = fit_lpca(X_train, fc);
          s_train = scores(fit.model, X_train);
          s_test = scores(fit.model, X_test);
          break;
        }
        case Method::lsvd: {
          const auto fit = fit_lsvd(X_train, fc);
          s_train = fit.model.A;
          s_test = lsvd_new_scores(fit.model, X_test);
          break;
        }
        case Method::fantope:
          throw InvalidArgument("pcr_experiment: fantope has no scores");
      }
      for (std::size_t s = 0; s < cfg.snr_grid.size(); ++s) {
        const auto ls = regress_on_scores(s_train, y_train[s]);
        rows.push_back({std::string(to_string(method)), k, cfg.snr_grid[s],
                        predict_mse(s_train, ls.coef, y_train[s]),
                        predict_mse(s_test, ls.coef, y_test[s]), ls.ridge});
      }
    }
  }
  return rows;
}

inline void write_pcr_csv(std::ostream& os, const std::vector<PcrRow>& rows) {
  os << "method,k,snr,mse_in,mse_out,ridge\n";
  os.precision(17);
  for (const auto& r : rows)
    os << r.method << ',' << r.k << ',' << r.snr << ',' << r.mse_in << ',' << r.mse_out << ','
       << (r.ridge ? 1 : 0) << '\n';
}

}  // namespace lpca

#endif  // LPCA_SIMGEN_HPP
