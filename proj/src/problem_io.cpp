#include "gapflow/problem_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gapflow/errors.hpp"

namespace gapflow {

namespace {

using nlohmann::json;

const json& require_key(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("problem file: missing key '") + key + "'");
  return j.at(key);
}

double to_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError("problem file: " + what + " must be numeric");
  return v.get<double>();
}

double to_bound(const json& v, double infinite_value, const std::string& what) {
  if (v.is_null()) return infinite_value;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    const double inf = std::numeric_limits<double>::infinity();
    if (s == "inf" || s == "+inf" || s == "Infinity") return inf;
    if (s == "-inf" || s == "-Infinity") return -inf;
    throw ConfigError("problem file: bad bound '" + s + "' in " + what);
  }
  return to_number(v, what);
}

Vector read_vector(const json& v, const std::string& what) {
  if (v.is_number()) return Vector::Constant(1, v.get<double>());
  if (!v.is_array()) throw ConfigError("problem file: " + what + " must be an array");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Index>(i)] = to_number(v[i], what);
  }
  return out;
}

Vector read_bounds(const json& v, double infinite_value, const std::string& what) {
  if (!v.is_array()) {
    return Vector::Constant(1, to_bound(v, infinite_value, what));
  }
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Index>(i)] = to_bound(v[i], infinite_value, what);
  }
  return out;
}

// `rows` is the expected row count; columns follow from the data.
DenseMatrix read_matrix(const json& v, Index rows, const std::string& what) {
  if (v.is_number()) {
    if (rows != 1) throw DimensionMismatch("problem file: " + what + " must have " +
                                           std::to_string(rows) + " rows");
    return DenseMatrix::Constant(1, 1, v.get<double>());
  }
  if (!v.is_array()) throw ConfigError("problem file: " + what + " must be an array");
  const bool nested = !v.empty() && v[0].is_array();
  if (nested) {
    if (static_cast<Index>(v.size()) != rows) {
      throw DimensionMismatch("problem file: " + what + " has " +
                              std::to_string(v.size()) + " rows, expected " +
                              std::to_string(rows));
    }
    const Index cols = static_cast<Index>(v[0].size());
    DenseMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
        throw DimensionMismatch("problem file: ragged rows in " + what);
      }
      for (Index j = 0; j < cols; ++j) m(i, j) = to_number(row[static_cast<std::size_t>(j)], what);
    }
    return m;
  }
  const Index total = static_cast<Index>(v.size());
  if (rows == 0 || total % rows != 0) {
    throw DimensionMismatch("problem file: " + what + " has " + std::to_string(total) +
                            " entries, not a multiple of " + std::to_string(rows) +
                            " rows");
  }
  const Index cols = total / rows;
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = to_number(v[static_cast<std::size_t>(i * cols + j)], what);
    }
  }
  return m;
}

BoxSet read_box(const json& j) {
  const double inf = std::numeric_limits<double>::infinity();
  if (j.contains("K")) {
    const json& k = j.at("K");
    if (!k.is_object() || k.value("type", std::string("box")) != "box" ||
        !k.contains("lower") || !k.contains("upper")) {
      throw UnsupportedSet("problem file: only box-shaped K is supported");
    }
    return {read_bounds(k.at("lower"), -inf, "K.lower"),
            read_bounds(k.at("upper"), inf, "K.upper")};
  }
  return {read_bounds(require_key(j, "K_lower"), -inf, "K_lower"),
          read_bounds(require_key(j, "K_upper"), inf, "K_upper")};
}

}  // namespace

ProblemFile parse_problem_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("problem file: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("problem file: top level must be an object");

  ProblemFile pf;
  auto& p = pf.problem;
  p.x0 = read_vector(require_key(j, "x0"), "x0");
  p.K = read_box(j);
  const Index n_x = p.x0.size();
  const Index n_l = p.K.size();

  p.A = read_matrix(require_key(j, "A"), n_x, "A");
  p.B = read_matrix(require_key(j, "B"), n_x, "B");
  p.E = read_matrix(require_key(j, "E"), n_x, "E");
  p.C = read_matrix(require_key(j, "C"), n_l, "C");
  p.D = read_matrix(require_key(j, "D"), n_l, "D");
  p.G = read_matrix(require_key(j, "G"), n_l, "G");
  p.Q = read_matrix(require_key(j, "Q"), n_x, "Q");
  p.R = read_matrix(require_key(j, "R"), p.B.cols(), "R");
  p.S_lambda = read_matrix(require_key(j, "S_lambda"), n_l, "S_lambda");
  p.horizon = to_number(require_key(j, "T_horizon"), "T_horizon");

  const json& n = require_key(j, "N");
  if (!n.is_number_integer() || n.get<long long>() < 1) {
    throw ConfigError("problem file: N must be a positive integer");
  }
  pf.discretization.stages = static_cast<Index>(n.get<long long>());
  pf.discretization.dt = j.contains("dt")
                             ? to_number(j.at("dt"), "dt")
                             : p.horizon / static_cast<double>(pf.discretization.stages);

  if (j.contains("reformulation")) {
    const json& r = j.at("reformulation");
    if (!r.is_string()) throw ConfigError("problem file: reformulation must be a string");
    pf.reformulation = parse_reformulation(r.get<std::string>());
  }
  if (j.contains("gap")) {
    const json& g = j.at("gap");
    if (!g.is_object()) throw ConfigError("problem file: gap must be an object");
    if (g.contains("c")) pf.gap.c = to_number(g.at("c"), "gap.c");
    if (g.contains("a")) pf.gap.a = to_number(g.at("a"), "gap.a");
    if (g.contains("b")) pf.gap.b = to_number(g.at("b"), "gap.b");
  }

  p.validate();
  pf.discretization.validate(p.horizon);
  pf.gap.validate();
  return pf;
}

ProblemFile load_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open problem file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_problem_json(buf.str());
}

std::filesystem::path bundled_problem_path() {
  return std::filesystem::path(GAPFLOW_DATA_DIR) / "lcs_vieira.json";
}

namespace {

// Shortest round-trip representation keeps files byte-stable across runs.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_header(std::ostream& os) {
  os << "l,tau,s,kkt_residual,scaled_residual,step_time_ms,min_pivot\n";
}

void write_trace_row(std::ostream& os, const TraceRecord& r) {
  os << r.l << ',' << fmt(r.tau) << ',' << fmt(r.s) << ',' << fmt(r.residual) << ','
     << fmt(r.scaled_residual) << ',' << fmt(r.step_time_ms) << ','
     << fmt(r.min_pivot) << '\n';
}

void write_trace_csv(std::ostream& os, const ContinuationTrace& trace) {
  write_trace_header(os);
  for (const auto& r : trace) write_trace_row(os, r);
}

void write_solution_csv(std::ostream& os, const Trajectory& t) {
  os << "n,t";
  for (Index i = 0; i < t.x.cols(); ++i) os << ",x_" << i + 1;
  for (Index i = 0; i < t.u.cols(); ++i) os << ",u_" << i + 1;
  for (Index i = 0; i < t.lambda.cols(); ++i) os << ",lambda_" << i + 1;
  for (Index i = 0; i < t.eta.cols(); ++i) os << ",eta_" << i + 1;
  os << '\n';
  for (Index k = 0; k < t.x.rows(); ++k) {
    os << k + 1 << ',' << fmt(t.time[k]);
    for (Index i = 0; i < t.x.cols(); ++i) os << ',' << fmt(t.x(k, i));
    for (Index i = 0; i < t.u.cols(); ++i) os << ',' << fmt(t.u(k, i));
    for (Index i = 0; i < t.lambda.cols(); ++i) os << ',' << fmt(t.lambda(k, i));
    for (Index i = 0; i < t.eta.cols(); ++i) os << ',' << fmt(t.eta(k, i));
    os << '\n';
  }
}

}  // namespace gapflow
