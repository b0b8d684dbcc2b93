#ifndef LPCA_TOOLS_CLI_HPP
#define LPCA_TOOLS_CLI_HPP

// Subcommands of the lpca tool. Exit codes: 0 success, 1 failed check,
// 2 invalid input or arguments, 3 numerical failure.

#include "lpca/lpca.hpp"
#include "lpca_io.hpp"

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lpca::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

using lpca::detail::require;

inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = io::detail::parse_number(item);
    require(v.has_value(), flag + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  require(!out.empty(), flag + ": empty list");
  return out;
}

inline std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (double v : parse_list(text, flag)) {
    require(v == std::floor(v), flag + ": " + std::to_string(v) + " is not an integer");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

inline std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(method_from_string(item));
  require(!out.empty(), "--methods: empty list");
  return out;
}

// Writes to the named file, or to `fallback` when the name is empty.
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream os(path);
  if (!os) throw io::FormatError("cannot open '" + path + "' for writing");
  write(os);
}

inline std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + ".csv")).string();
}

struct Common {
  double m = 4.0;
  int max_iter = 1000;
  double tol = 1e-5;
  std::uint64_t seed = 0;
  bool no_main_effects = false;
  unsigned threads = 1;

  FitConfig config(double k) const {
    FitConfig cfg;
    cfg.k = k;
    cfg.m = m;
    cfg.max_iter = max_iter;
    cfg.tol = tol;
    cfg.seed = seed;
    cfg.include_mu = !no_main_effects;
    return cfg;
  }
};

inline void add_solver_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--max-iter", c.max_iter, "Iteration cap")->capture_default_str();
  cmd->add_option("--tol", c.tol, "Stop when the average deviance changes by less than this")
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_flag("--no-main-effects", c.no_main_effects, "Fix mu = 0");
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string method = "lpca";
  std::string family = "bernoulli";
  std::string init = "svd";
  double k = 1.0;
  std::string output;
  Common common;
};

inline int cmd_fit(const FitArgs& a, std::ostream& /*out*/, std::ostream& err) {
  const Method method = method_from_string(a.method);
  const Family family = family_from_string(a.family);
  FitConfig cfg = a.common.config(a.k);
  if (a.init == "random")
    cfg.init = InitMethod::random;
  else
    require(a.init == "svd", "--init: expected 'svd' or 'random', got '" + a.init + "'");

  io::ModelFile model;
  if (method == Method::lpca && family == Family::gaussian) {
    cfg.family = Family::gaussian;
    const Matrix X = io::read_matrix(a.input).values;
    const auto fit = fit_lpca(X, cfg);
    model = io::from_lpca(fit);
    err << "fit: lpca (gaussian) k=" << cfg.rank() << " iterations=" << fit.report.iterations
        << " converged=" << fit.report.converged
        << " average deviance=" << fmt(fit.report.final_deviance()) << '\n';
  } else {
    require(family == Family::bernoulli,
            "--family " + a.family + " is only available with --method lpca");
    const BinaryMatrix X = io::read_binary_matrix(a.input);
    switch (method) {
      case Method::lpca: {
        const auto fit = fit_lpca(X, cfg);
        model = io::from_lpca(fit);
        err << "fit: lpca k=" << cfg.rank() << " m=" << cfg.m
            << " iterations=" << fit.report.iterations << " converged=" << fit.report.converged
            << " average deviance=" << fmt(fit.report.final_deviance()) << '\n';
        break;
      }
      case Method::lsvd: {
        const auto fit = fit_lsvd(X, cfg);
        model = io::from_lsvd(fit, cfg.m);
        err << "fit: lsvd k=" << cfg.rank() << " iterations=" << fit.report.iterations
            << " converged=" << fit.report.converged
            << " average deviance=" << fmt(fit.report.final_deviance()) << '\n';
        break;
      }
      case Method::fantope: {
        const auto fit = fit_fantope(X, cfg);
        model = io::from_fantope(fit);
        err << "fit: fantope k=" << cfg.k << " m=" << cfg.m
            << " iterations=" << fit.report.iterations << " converged=" << fit.report.converged
            << " average deviance=" << fmt(fit.report.best_deviance()) << '\n';
        break;
      }
      case Method::pca: {
        require(a.k == std::floor(a.k), "--k must be an integer for pca");
        const auto pca = fit_pca(X.values(), static_cast<Index>(a.k));
        model = io::from_pca(pca);
        const double dev = bernoulli_deviance(X, pca_theta(pca, X.values()));
        model.fit_report = {{"bernoulli_deviance_clipped", dev},
                            {"probability_floor", kPcaProbabilityFloor}};
        err << "fit: pca k=" << pca.U.cols()
            << " bernoulli deviance (probabilities clipped to [1e-10, 1-1e-10])=" << fmt(dev)
            << '\n';
        break;
      }
    }
  }
  if (model.method == Method::lpca || model.method == Method::pca)
    err << "fit: ||U^T U - I||_F = " << orthonormality_error(model.U) << '\n';
  io::write_model(a.output, model);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
  std::string input;
  std::string out_scores;
  std::string out_theta;
  std::string out_prob;
};

inline int cmd_predict(const PredictArgs& a, std::ostream& /*out*/, std::ostream& err) {
  const io::ModelFile f = io::read_model(a.model);
  require(!a.out_scores.empty() || !a.out_theta.empty() || !a.out_prob.empty(),
          "predict: give at least one of --out-scores, --out-theta, --out-prob");
  const Matrix X = f.family == Family::bernoulli ? io::read_binary_matrix(a.input).values()
                                                 : io::read_matrix(a.input).values;
  require(X.cols() == f.columns(), "predict: input has " + std::to_string(X.cols()) +
                                       " columns, model expects " + std::to_string(f.columns()));
  Matrix S, theta, prob;
  const bool want_scores = !a.out_scores.empty();
  switch (f.method) {
    case Method::lpca: {
      const LpcaModel model = io::to_lpca(f);
      if (want_scores) S = scores(model, X);
      theta = predict_theta(model, X);
      prob = fitted_means(theta, model.family);
      break;
    }
    case Method::pca: {
      const PcaModel model = io::to_pca(f);
      if (want_scores) S = pca_scores(model, X);
      prob = pca_probability_estimate(model, X);
      theta = prob.unaryExpr([](double p) { return logit(p); });
      break;
    }
    case Method::lsvd: {
      err << "predict: lsvd scores need a logistic regression per row (" << X.rows()
          << " rows)\n";
      const auto start = std::chrono::steady_clock::now();
      const LsvdModel model = io::to_lsvd(f);
      S = lsvd_new_scores(model, BinaryMatrix(X));
      theta = S * model.B.transpose();
      theta.rowwise() += model.mu.transpose();
      prob = fitted_probabilities(theta);
      err << "predict: per-row solves took "
          << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()
          << " s\n";
      break;
    }
    case Method::fantope: {
      require(!want_scores, "predict: a fantope model has no scores; use --out-theta or --out-prob");
      const FantopeModel model = io::to_fantope(f);
      theta = fantope_theta(model, saturate(BinaryMatrix(X), model.m).values);
      prob = fitted_probabilities(theta);
      break;
    }
  }
  if (want_scores) io::write_matrix(a.out_scores, S);
  if (!a.out_theta.empty()) io::write_matrix(a.out_theta, theta);
  if (!a.out_prob.empty()) io::write_matrix(a.out_prob, prob);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

struct CvArgs {
  std::string input;
  int k = 1;
  std::string m_grid;
  int folds = 5;
  std::string output;
  Common common;
};

inline void write_cv_csv(std::ostream& os, const CvResult& r) {
  os << "m,mean_deviance";
  for (int f = 1; f <= r.folds; ++f) os << ",fold_" << f;
  os << '\n';
  os.precision(17);
  for (const auto& cell : r.grid) {
    os << cell.m << ',' << cell.mean_deviance;
    for (double v : cell.fold_deviance) os << ',' << v;
    os << '\n';
  }
}

inline int cmd_cv(const CvArgs& a, std::ostream& out, std::ostream& err) {
  const BinaryMatrix X = io::read_binary_matrix(a.input);
  const auto grid = a.m_grid.empty() ? default_m_grid() : parse_list(a.m_grid, "--m-grid");
  const FitConfig base = a.common.config(a.k);
  const CvResult r = cross_validate_m(X, a.k, grid, a.folds, a.common.seed, base, a.common.threads);
  emit(a.output, out, [&](std::ostream& os) { write_cv_csv(os, r); });
  out << "chosen m: " << r.chosen_m << '\n';
  err << "cv: " << a.folds << " folds, " << grid.size() << " values of m\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// scree
// ---------------------------------------------------------------------------

struct ScreeArgs {
  std::string input;
  std::string method = "lpca";
  int k_max = 1;
  std::string m = "4";
  int reference_k = 0;
  std::string m_grid;
  int folds = 5;
  double gamma = 0.9;
  bool stop_early = false;
  std::string output;
  Common common;
};

inline int cmd_scree(const ScreeArgs& a, std::ostream& out, std::ostream& err) {
  const BinaryMatrix X = io::read_binary_matrix(a.input);
  const Method method = method_from_string(a.method);
  require(method != Method::fantope, "scree: --method fantope is not supported");
  Common c = a.common;
  if (a.m == "auto") {
    require(method == Method::lpca, "--m auto needs --method lpca");
    const int ref = a.reference_k > 0 ? a.reference_k : a.k_max;
    const auto grid = a.m_grid.empty() ? default_m_grid() : parse_list(a.m_grid, "--m-grid");
    const CvResult r =
        cross_validate_m(X, ref, grid, a.folds, c.seed, c.config(ref), c.threads);
    c.m = r.chosen_m;
    err << "scree: m = " << c.m << " chosen by " << a.folds << "-fold cv at k = " << ref << '\n';
  } else {
    const auto v = io::detail::parse_number(a.m);
    require(v.has_value(), "--m: expected a number or 'auto', got '" + a.m + "'");
    c.m = *v;
  }
  const ScreeTable table =
      scree(X, method, a.k_max, c.config(1), a.stop_early ? std::optional<double>(a.gamma) : std::nullopt);
  emit(a.output, out, [&](std::ostream& os) {
    os << "k,cumulative,marginal,deviance,parameters\n";
    os.precision(17);
    for (const auto& row : table.rows) {
      const double params = method == Method::lsvd ? lsvd_parameter_count(X.rows(), X.cols(), row.k)
                                                   : lpca_parameter_count(X.cols(), row.k);
      os << row.k << ',' << row.cumulative << ',' << row.marginal << ',' << row.deviance << ','
         << params << '\n';
    }
  });
  if (const auto k = smallest_k_reaching(table, a.gamma))
    err << "scree: smallest k explaining " << a.gamma << " of the deviance: " << *k << '\n';
  else
    err << "scree: no k up to " << table.rows.back().k << " explains " << a.gamma
        << " of the deviance\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  MixtureSpec spec;
  std::string output;
  std::string out_prob;
  std::string out_assign;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& /*out*/, std::ostream& err) {
  const SimulatedDataset ds = simulate(a.spec);
  const std::string prob_path = a.out_prob.empty() ? sibling_path(a.output, "_P") : a.out_prob;
  const std::string assign_path =
      a.out_assign.empty() ? sibling_path(a.output, "_assign") : a.out_assign;
  io::write_matrix(a.output, ds.X.values());
  io::write_matrix(prob_path, ds.P);
  Matrix labels(static_cast<Index>(ds.assignments.size()), 1);
  for (std::size_t i = 0; i < ds.assignments.size(); ++i)
    labels(static_cast<Index>(i), 0) = ds.assignments[i];
  io::write_matrix(assign_path, labels);
  err << "simulate: wrote " << a.output << ", " << prob_path << ", " << assign_path << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

struct CheckArgs {
  std::string input;
  std::string model;
  std::string theorem;
  double m = 4.0;
  int column = -1;
  double step = 0.005;
  double tolerance = 1e-3;
};

/// Ten rows: each of (0,0), (0,1), (1,0), (1,1), (1,1) once with a third
/// column of 0 and once with 1. Column 2 has mean 1/2 and is uncorrelated
/// with the others.
inline BinaryMatrix default_theorem1_data() {
  const std::vector<std::array<double, 2>> base{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}};
  Matrix X(10, 3);
  for (std::size_t r = 0; r < base.size(); ++r) {
    for (int half = 0; half < 2; ++half) {
      const auto i = static_cast<Index>(2 * r + static_cast<std::size_t>(half));
      X(i, 0) = base[r][0];
      X(i, 1) = base[r][1];
      X(i, 2) = half;
    }
  }
  return BinaryMatrix(std::move(X));
}

/// Full factorial over three columns with column weights 1:1, 1:3 and 2:3,
/// giving exactly uncorrelated columns with distinct means.
inline BinaryMatrix default_theorem2_data() {
  const std::vector<std::vector<double>> levels{{0, 1}, {0, 1, 1, 1}, {0, 0, 0, 1, 1}};
  std::vector<std::array<double, 3>> rows;
  for (double a : levels[0])
    for (double b : levels[1])
      for (double c : levels[2]) rows.push_back({a, b, c});
  Matrix X(static_cast<Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Index j = 0; j < 3; ++j) X(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return BinaryMatrix(std::move(X));
}

/// All 2^3 sign patterns: Q^T Q = 8 I.
inline BinaryMatrix default_theorem3_data() {
  Matrix X(8, 3);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 3; ++j) X(i, j) = static_cast<double>((i >> j) & 1);
  return BinaryMatrix(std::move(X));
}

inline int check_model(const CheckArgs& a, std::ostream& out) {
  const io::ModelFile f = io::read_model(a.model);
  require(f.method == Method::lpca, "check --model: only lpca models carry loadings to check");
  const LpcaModel model = io::to_lpca(f);
  const Matrix X = f.family == Family::bernoulli ? io::read_binary_matrix(a.input).values()
                                                 : io::read_matrix(a.input).values;
  require(X.cols() == model.U.rows(), "check: input and model column counts differ");
  const OptimalityReport rep = optimality_residuals(X, model);
  const double scale = std::max(1.0, (cm_matrix(X, model) * model.U).norm());
  const double rel = rep.stationarity_residual / scale;
  const bool pass = rel <= a.tolerance && rep.ortho_residual <= 1e-8;
  out << "stationarity residual ||CU - U(U^T C U)||_F: " << rep.stationarity_residual
      << " (relative " << rel << ")\n"
      << "main-effect residual ||(I - UU^T)(X - P)^T 1||: " << rep.mu_residual << '\n'
      << "orthonormality ||U^T U - I||_F: " << rep.ortho_residual << '\n'
      << (pass ? "PASS" : "FAIL") << " (tolerance " << a.tolerance << ")\n";
  return pass ? kExitOk : kExitCheckFailed;
}

inline int check_t1(const CheckArgs& a, std::ostream& out) {
  const BinaryMatrix X = a.input.empty() ? default_theorem1_data() : io::read_binary_matrix(a.input);
  Index l = a.column;
  if (l < 0) {
    for (Index j = 0; j < X.cols() && l < 0; ++j)
      if (X.values().col(j).mean() == 0.5 && uncorrelated_with_rest(X.values(), j)) l = j;
    if (l < 0) {
      out << "precondition failed: no column has mean exactly 1/2 and zero correlation with the "
             "others\nFAIL\n";
      return kExitCheckFailed;
    }
  }
  require(l < X.cols(), "--column out of range");
  const IndependenceCheck c = independence_check(X, l, a.m);
  out << "column " << l << ": mean " << c.column_mean << '\n';
  if (!c.uncorrelated) {
    out << "precondition failed: column " << l << " is correlated with another column\nFAIL\n";
    return kExitCheckFailed;
  }
  const double scale = std::max(1.0, std::abs(c.predicted_multiplier));
  const bool pass = c.stationarity_residual <= 1e-10 &&
                    std::abs(c.multiplier - c.predicted_multiplier) <= 1e-10 * scale;
  out << std::setprecision(12) << "stationarity residual at U = e_" << l << ": "
      << c.stationarity_residual << '\n'
      << "lambda_m: " << c.multiplier << " (predicted " << c.predicted_multiplier << ")\n";
  if (c.column_mean == 0.5)
    out << "2nm/(1+e^m) = " << independence_multiplier(X.rows(), a.m) << '\n';
  out << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

inline int check_t2(const CheckArgs& a, std::ostream& out) {
  const BinaryMatrix X = a.input.empty() ? default_theorem2_data() : io::read_binary_matrix(a.input);
  if (!pairwise_uncorrelated(X.values())) {
    out << "precondition failed: the columns are not pairwise uncorrelated\nFAIL\n";
    return kExitCheckFailed;
  }
  const OrderingReport r = theorem2_ordering(X, a.m);
  out << std::setprecision(12);
  const Vector means = column_means(X.values());
  for (Index j = 0; j < X.cols(); ++j)
    out << "column " << j << ": mean " << means(j) << ", deviance at e_" << j << " "
        << r.deviance[static_cast<std::size_t>(j)] << '\n';
  out << "exhaustive best: " << r.exhaustive_best << ", mean closest to 1/2: " << r.closest_to_half
      << '\n'
      << (r.agree() ? "PASS" : "FAIL") << '\n';
  return r.agree() ? kExitOk : kExitCheckFailed;
}

inline int check_t3(const CheckArgs& a, std::ostream& out) {
  const BinaryMatrix X = a.input.empty() ? default_theorem3_data() : io::read_binary_matrix(a.input);
  const CompoundSymmetryReport r = compound_symmetry_check(X, a.m);
  if (!r.compound_symmetric || !r.applicable) {
    out << "precondition failed: " << r.message << "\nFAIL\n";
    return kExitCheckFailed;
  }
  const bool pass = r.stationarity_residual < 1e-8;
  out << std::setprecision(12) << "Q^T Q: diagonal " << r.diagonal << ", off-diagonal "
      << r.off_diagonal << '\n'
      << "beta: " << r.beta << " (affine residual " << r.affine_residual << ")\n"
      << "stationarity residual at u = 1/sqrt(d) 1: " << r.stationarity_residual << '\n'
      << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

inline int check_oracle(const CheckArgs& a, std::ostream& out) {
  require(!a.input.empty(), "check --theorem oracle needs --input");
  const BinaryMatrix X = io::read_binary_matrix(a.input);
  require(X.cols() == 2 || X.cols() == 3, "check --theorem oracle: input must have 2 or 3 columns");
  const GridOracleResult g = grid_oracle_rank1(X, a.m, a.step);
  FitConfig cfg;
  cfg.k = 1;
  cfg.m = a.m;
  cfg.include_mu = false;
  cfg.tol = 1e-13;
  cfg.max_iter = 20000;
  const auto fit = fit_lpca(X, cfg);
  const double mm = bernoulli_deviance(X, predict_theta(fit.model, X));
  const bool pass = mm <= g.deviance + g.resolution_bound + 1e-9 &&
                    mm >= g.deviance - g.resolution_bound - 1e-9;
  out << std::setprecision(12) << "grid optimum: " << g.deviance << " (resolution bound "
      << g.resolution_bound << ", " << g.evaluations << " points)\n"
      << "mm deviance: " << mm << '\n'
      << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

inline int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& /*err*/) {
  require(a.model.empty() != a.theorem.empty(), "check: give exactly one of --model or --theorem");
  if (!a.model.empty()) {
    require(!a.input.empty(), "check --model needs --input");
    return check_model(a, out);
  }
  if (a.theorem == "t1") return check_t1(a, out);
  if (a.theorem == "t2") return check_t2(a, out);
  if (a.theorem == "t3") return check_t3(a, out);
  if (a.theorem == "oracle") return check_oracle(a, out);
  throw InvalidArgument("--theorem: expected t1, t2, t3 or oracle, got '" + a.theorem + "'");
}

// ---------------------------------------------------------------------------
// sweep and pcr
// ---------------------------------------------------------------------------

struct SweepArgs {
  SweepSpec spec;
  std::string k_true = "2,3,5,10";
  std::string phi = "0.01,1,3";
  std::string k_hat = "1,3,5,10";
  std::string m_grid;
  std::string methods = "lpca,lsvd";
  std::string output;
  Common common;
};

inline int cmd_sweep(SweepArgs a, std::ostream& out, std::ostream& err) {
  a.spec.k_true = parse_int_list(a.k_true, "--k-true");
  a.spec.phi = parse_list(a.phi, "--phi");
  a.spec.k_hat = parse_int_list(a.k_hat, "--k-hat");
  if (!a.m_grid.empty()) a.spec.m_grid = parse_list(a.m_grid, "--m-grid");
  a.spec.methods = parse_methods(a.methods);
  a.spec.seed = a.common.seed;
  a.spec.threads = a.common.threads;
  a.spec.base = a.common.config(1);
  const auto start = std::chrono::steady_clock::now();
  const auto rows = run_sweep(a.spec);
  emit(a.output, out, [&](std::ostream& os) { write_sweep_csv(os, rows); });
  err << "sweep: " << rows.size() << " cells in "
      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() << " s\n";
  return kExitOk;
}

struct PcrArgs {
  std::string train;
  std::string test;
  std::string methods = "pca,lpca,lsvd";
  std::string k_grid = "1,2,3,4,5";
  std::string snr_grid = "1,5,10";
  std::string output;
  Common common;
};

inline int cmd_pcr(const PcrArgs& a, std::ostream& out, std::ostream& /*err*/) {
  const BinaryMatrix train = io::read_binary_matrix(a.train);
  const BinaryMatrix test = io::read_binary_matrix(a.test);
  PcrConfig cfg;
  cfg.methods = parse_methods(a.methods);
  cfg.k_grid = parse_int_list(a.k_grid, "--k-grid");
  cfg.snr_grid = parse_list(a.snr_grid, "--snr-grid");
  cfg.seed = a.common.seed;
  cfg.base = a.common.config(1);
  const auto rows = pcr_experiment(train, test, cfg);
  emit(a.output, out, [&](std::ostream& os) { write_pcr_csv(os, rows); });
  return kExitOk;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  using namespace detail;
  CLI::App app{"Logistic PCA by projection of saturated natural parameters", "lpca"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a model and write it as JSON");
  c_fit->add_option("--input", fit.input, "Data matrix (CSV)")->required();
  c_fit->add_option("--method", fit.method, "lpca, lsvd, fantope or pca")->capture_default_str();
  c_fit->add_option("--family", fit.family, "bernoulli or gaussian (lpca only)")
      ->capture_default_str();
  c_fit->add_option("--k", fit.k, "Number of components (fantope accepts non-integers)")
      ->required();
  c_fit->add_option("--m", fit.common.m, "Scale of the saturated parameters")->capture_default_str();
  c_fit->add_option("--init", fit.init, "svd or random")->capture_default_str();
  c_fit->add_option("--output-model", fit.output, "Model file to write")->required();
  add_solver_flags(c_fit, fit.common);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Apply a fitted model to new rows");
  c_pred->add_option("--model", pred.model, "Model file from fit")->required();
  c_pred->add_option("--input", pred.input, "Rows to score (CSV)")->required();
  c_pred->add_option("--out-scores", pred.out_scores, "Principal component scores");
  c_pred->add_option("--out-theta", pred.out_theta, "Natural parameters");
  c_pred->add_option("--out-prob", pred.out_prob, "Fitted probabilities");

  CvArgs cv;
  auto* c_cv = app.add_subcommand("cv", "Choose m by K-fold cross-validation");
  c_cv->add_option("--input", cv.input, "Binary data matrix (CSV)")->required();
  c_cv->add_option("--k", cv.k, "Number of components")->required();
  c_cv->add_option("--m-grid", cv.m_grid, "Comma-separated values (default 0.5,1,...,5)");
  c_cv->add_option("--folds", cv.folds, "Number of row folds")->capture_default_str();
  c_cv->add_option("--output", cv.output, "CSV file (default stdout)");
  c_cv->add_option("--threads", cv.common.threads, "Worker threads")->capture_default_str();
  add_solver_flags(c_cv, cv.common);

  ScreeArgs sc;
  auto* c_scree = app.add_subcommand("scree", "Deviance explained for k = 1..k-max");
  c_scree->add_option("--input", sc.input, "Binary data matrix (CSV)")->required();
  c_scree->add_option("--method", sc.method, "lpca, lsvd or pca")->capture_default_str();
  c_scree->add_option("--k-max", sc.k_max, "Largest rank to fit")->required();
  c_scree->add_option("--m", sc.m, "A number, or 'auto' for cross-validation")
      ->capture_default_str();
  c_scree->add_option("--reference-k", sc.reference_k, "Rank used to cross-validate m");
  c_scree->add_option("--m-grid", sc.m_grid, "Candidates for --m auto");
  c_scree->add_option("--folds", sc.folds)->capture_default_str();
  c_scree->add_option("--gamma", sc.gamma, "Target fraction of deviance")->capture_default_str();
  c_scree->add_flag("--stop-early", sc.stop_early, "Stop once the cumulative fraction exceeds gamma");
  c_scree->add_option("--output", sc.output, "CSV file (default stdout)");
  c_scree->add_option("--threads", sc.common.threads, "Worker threads")->capture_default_str();
  add_solver_flags(c_scree, sc.common);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Draw a binary matrix from a Bernoulli mixture");
  c_sim->add_option("--n", sim.spec.n)->capture_default_str();
  c_sim->add_option("--d", sim.spec.d)->capture_default_str();
  c_sim->add_option("--k", sim.spec.k_true, "Number of clusters")->capture_default_str();
  c_sim->add_option("--pbar", sim.spec.pbar)->capture_default_str();
  c_sim->add_option("--phi", sim.spec.phi)->capture_default_str();
  c_sim->add_option("--seed", sim.spec.seed)->capture_default_str();
  c_sim->add_option("--output", sim.output, "Binary matrix CSV")->required();
  c_sim->add_option("--out-prob", sim.out_prob, "True probabilities (default <output>_P.csv)");
  c_sim->add_option("--out-assign", sim.out_assign,
                    "Cluster labels (default <output>_assign.csv)");

  CheckArgs chk;
  auto* c_chk = app.add_subcommand("check", "Verify optimality conditions");
  c_chk->add_option("--input", chk.input, "Binary data matrix (CSV)");
  c_chk->add_option("--model", chk.model, "Fitted lpca model to test for stationarity");
  c_chk->add_option("--theorem", chk.theorem, "t1, t2, t3 or oracle");
  c_chk->add_option("--m", chk.m)->capture_default_str();
  c_chk->add_option("--column", chk.column, "Column for t1 (default: first qualifying column)");
  c_chk->add_option("--step", chk.step, "Angle step of the oracle grid")->capture_default_str();
  c_chk->add_option("--tolerance", chk.tolerance, "Relative tolerance for --model")
      ->capture_default_str();

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "Probability-recovery simulation sweep");
  c_sw->add_option("--n", sw.spec.n)->capture_default_str();
  c_sw->add_option("--d", sw.spec.d)->capture_default_str();
  c_sw->add_option("--pbar", sw.spec.pbar)->capture_default_str();
  c_sw->add_option("--k-true", sw.k_true)->capture_default_str();
  c_sw->add_option("--phi", sw.phi)->capture_default_str();
  c_sw->add_option("--k-hat", sw.k_hat)->capture_default_str();
  c_sw->add_option("--m-grid", sw.m_grid, "Comma-separated values (default 0.5,1,...,5)");
  c_sw->add_option("--methods", sw.methods)->capture_default_str();
  c_sw->add_flag("--cv", sw.spec.cross_validate, "Add rows with m chosen by cross-validation");
  c_sw->add_option("--folds", sw.spec.folds)->capture_default_str();
  c_sw->add_option("--m", sw.common.m, "Scale used to initialize lsvd")->capture_default_str();
  c_sw->add_option("--output", sw.output, "CSV file (default stdout)");
  c_sw->add_option("--threads", sw.common.threads, "Worker threads")->capture_default_str();
  add_solver_flags(c_sw, sw.common);

  PcrArgs pcr;
  auto* c_pcr = app.add_subcommand("pcr", "Principal component regression experiment");
  c_pcr->add_option("--train", pcr.train, "Training rows (CSV)")->required();
  c_pcr->add_option("--test", pcr.test, "Held-out rows (CSV)")->required();
  c_pcr->add_option("--methods", pcr.methods)->capture_default_str();
  c_pcr->add_option("--k-grid", pcr.k_grid)->capture_default_str();
  c_pcr->add_option("--snr-grid", pcr.snr_grid)->capture_default_str();
  c_pcr->add_option("--m", pcr.common.m)->capture_default_str();
  c_pcr->add_option("--output", pcr.output, "CSV file (default stdout)");
  add_solver_flags(c_pcr, pcr.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (c_fit->parsed()) return cmd_fit(fit, out, err);
    if (c_pred->parsed()) return cmd_predict(pred, out, err);
    if (c_cv->parsed()) return cmd_cv(cv, out, err);
    if (c_scree->parsed()) return cmd_scree(sc, out, err);
    if (c_sim->parsed()) return cmd_simulate(sim, out, err);
    if (c_chk->parsed()) return cmd_check(chk, out, err);
    if (c_sw->parsed()) return cmd_sweep(sw, out, err);
    if (c_pcr->parsed()) return cmd_pcr(pcr, out, err);
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}

/// Convenience overload for tests: args excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"lpca"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace lpca::cli

#endif  // LPCA_TOOLS_CLI_HPP
