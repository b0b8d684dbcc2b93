#ifndef LPCA_TOOLS_IO_HPP
#define LPCA_TOOLS_IO_HPP

// File formats used by the command-line tool.
//
// MatrixFile: comma-separated values, one matrix row per line. An optional
// first line of column names is recognized when any of its fields is not a
// number. Binary inputs must contain only 0 and 1.
//
// ModelFile: JSON
//   {
//     "format_version": 1,
//     "method": "lpca" | "lsvd" | "fantope" | "pca",
//     "family": "bernoulli" | "gaussian",
//     "m": number, "k": number,
//     "mu": [d numbers],
//     "U": [[k numbers] x d]                      (lpca, pca)
//     "A": [[k] x n], "B": [[k] x d]              (lsvd)
//     "H": [[d] x d]                              (fantope)
//     "fit_report": {...}
//   }
// Matrices are stored row-major as arrays of rows. Numbers are written in the
// shortest form that reads back to the identical double.

#include "lpca/lpca.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lpca::io {

using json = nlohmann::json;

/// Unreadable or malformed input files.
class FormatError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

struct MatrixFile {
  Matrix values;
  std::vector<std::string> header;  // empty when the file has none
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
      field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

inline MatrixFile parse_matrix(std::istream& in, const std::string& source) {
  MatrixFile out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (auto f : fields) {
      const auto v = detail::parse_number(f);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && out.header.empty()) {
        for (auto f : fields) out.header.emplace_back(f);
        width = fields.size();
        continue;
      }
      throw FormatError(source + ": line " + std::to_string(line_no) + " has a non-numeric field");
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw FormatError(source + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " fields, expected " + std::to_string(width));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(source + ": no data rows");
  out.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

inline MatrixFile read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return parse_matrix(in, path);
}

/// Reads a 0/1 matrix; the first offending entry is named in the error.
inline BinaryMatrix read_binary_matrix(const std::string& path) {
  MatrixFile file = read_matrix(path);
  const Matrix& v = file.values;
  const Index header_lines = file.header.empty() ? 0 : 1;
  for (Index i = 0; i < v.rows(); ++i)
    for (Index j = 0; j < v.cols(); ++j)
      if (v(i, j) != 0.0 && v(i, j) != 1.0)
        throw FormatError(path + ": data row " + std::to_string(i + 1) + " (line " +
                          std::to_string(i + 1 + header_lines) + "), column " +
                          std::to_string(j + 1) + " is not 0 or 1");
  return BinaryMatrix(std::move(file.values));
}

inline void format_matrix(std::ostream& os, const Matrix& M,
                          const std::vector<std::string>& header = {}) {
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    os << '\n';
  }
  os.precision(17);
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) os << (j ? "," : "") << M(i, j);
    os << '\n';
  }
}

inline void write_matrix(const std::string& path, const Matrix& M,
                         const std::vector<std::string>& header = {}) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  format_matrix(os, M, header);
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

inline constexpr int kFormatVersion = 1;

struct ModelFile {
  Method method = Method::lpca;
  Family family = Family::bernoulli;
  double m = 0.0;
  double k = 0.0;
  Vector mu;
  Matrix U;  // lpca, pca
  Matrix A;  // lsvd
  Matrix B;  // lsvd
  Matrix H;  // fantope
  json fit_report = json::object();

  Index columns() const {
    switch (method) {
      case Method::lpca:
      case Method::pca: return U.rows();
      case Method::lsvd: return B.rows();
      case Method::fantope: return H.rows();
    }
    return 0;
  }
};

inline json matrix_to_json(const Matrix& M) {
  json rows = json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, std::string_view name) {
  if (!j.is_array()) throw FormatError("model file: '" + std::string(name) + "' must be an array of rows");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.front().size());
  Matrix M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols)
      throw FormatError("model file: '" + std::string(name) + "' is not rectangular");
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw FormatError("model file: '" + std::string(name) + "' has a non-number");
      M(i, c) = v.get<double>();
    }
  }
  return M;
}

inline json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const json& j, std::string_view name) {
  if (!j.is_array()) throw FormatError("model file: '" + std::string(name) + "' must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("model file: '" + std::string(name) + "' has a non-number");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json report_to_json(const FitReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"elapsed_seconds", r.elapsed_seconds},
          {"final_average_deviance", r.deviance_trace.empty() ? 0.0 : r.final_deviance()},
          {"deviance_trace", r.deviance_trace}};
}

inline json to_json(const ModelFile& f) {
  json j;
  j["format_version"] = kFormatVersion;
  j["method"] = std::string(to_string(f.method));
  j["family"] = std::string(to_string(f.family));
  j["m"] = f.m;
  j["k"] = f.k;
  j["mu"] = vector_to_json(f.mu);
  switch (f.method) {
    case Method::lpca:
    case Method::pca: j["U"] = matrix_to_json(f.U); break;
    case Method::lsvd:
      j["A"] = matrix_to_json(f.A);
      j["B"] = matrix_to_json(f.B);
      break;
    case Method::fantope: j["H"] = matrix_to_json(f.H); break;
  }
  j["fit_report"] = f.fit_report;
  return j;
}

inline ModelFile model_from_json(const json& j) {
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw FormatError(std::string("model file: missing field '") + name + "'");
    return j.at(name);
  };
  ModelFile f;
  try {
    const int version = field("format_version").get<int>();
    if (version != kFormatVersion)
      throw FormatError("model file: unsupported format_version " + std::to_string(version));
    f.method = method_from_string(field("method").get<std::string>());
    f.family = family_from_string(field("family").get<std::string>());
    f.m = field("m").get<double>();
    f.k = field("k").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  f.mu = vector_from_json(field("mu"), "mu");
  Index d = 0;
  switch (f.method) {
    case Method::lpca:
    case Method::pca:
      f.U = matrix_from_json(field("U"), "U");
      d = f.U.rows();
      break;
    case Method::lsvd:
      f.A = matrix_from_json(field("A"), "A");
      f.B = matrix_from_json(field("B"), "B");
      d = f.B.rows();
      if (f.A.cols() != f.B.cols()) throw FormatError("model file: A and B have different widths");
      break;
    case Method::fantope:
      f.H = matrix_from_json(field("H"), "H");
      d = f.H.rows();
      if (f.H.cols() != d) throw FormatError("model file: H must be square");
      break;
  }
  if (f.mu.size() != d)
    throw FormatError("model file: mu has " + std::to_string(f.mu.size()) + " entries, expected " +
                      std::to_string(d));
  if (j.contains("fit_report")) f.fit_report = j.at("fit_report");
  return f;
}

inline std::string dump_model(const ModelFile& f) { return to_json(f).dump(2) + "\n"; }

inline void write_model(const std::string& path, const ModelFile& f) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  os << dump_model(f);
}

inline ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return model_from_json(j);
}

inline ModelFile from_lpca(const LpcaFit& fit) {
  ModelFile f;
  f.method = Method::lpca;
  f.family = fit.model.family;
  f.m = fit.model.m;
  f.k = fit.model.k;
  f.mu = fit.model.mu;
  f.U = fit.model.U;
  f.fit_report = report_to_json(fit.report);
  return f;
}

inline ModelFile from_lsvd(const LsvdFit& fit, double m) {
  ModelFile f;
  f.method = Method::lsvd;
  f.m = m;
  f.k = fit.model.k;
  f.mu = fit.model.mu;
  f.A = fit.model.A;
  f.B = fit.model.B;
  f.fit_report = report_to_json(fit.report);
  return f;
}

inline ModelFile from_fantope(const FantopeFit& fit) {
  ModelFile f;
  f.method = Method::fantope;
  f.m = fit.model.m;
  f.k = fit.model.k;
  f.mu = fit.model.mu;
  f.H = fit.model.H;
  f.fit_report = report_to_json(fit.report);
  return f;
}

inline ModelFile from_pca(const PcaModel& model) {
  ModelFile f;
  f.method = Method::pca;
  f.family = Family::gaussian;
  f.k = static_cast<double>(model.U.cols());
  f.mu = model.mu;
  f.U = model.U;
  return f;
}

inline LpcaModel to_lpca(const ModelFile& f) {
  return {f.U, f.mu, f.m, static_cast<int>(f.k), f.family};
}

inline LsvdModel to_lsvd(const ModelFile& f) { return {f.A, f.B, f.mu, static_cast<int>(f.k)}; }

inline FantopeModel to_fantope(const ModelFile& f) { return {f.H, f.mu, f.m, f.k}; }

inline PcaModel to_pca(const ModelFile& f) { return {f.U, f.mu}; }

}  // namespace lpca::io

#endif  // LPCA_TOOLS_IO_HPP
