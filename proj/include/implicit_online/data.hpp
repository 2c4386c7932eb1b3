#ifndef IMPLICIT_ONLINE_DATA_HPP
#define IMPLICIT_ONLINE_DATA_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/losses.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace implicit_online {

enum class Task { Classification, Regression };

inline const char* to_string(Task t) { return t == Task::Classification ? "classification" : "regression"; }

inline Task parse_task(std::string_view s) {
  if (s == "classification") return Task::Classification;
  if (s == "regression") return Task::Regression;
  throw Error("unknown task: " + std::string(s));
}

struct SparseEntry {
  int index;  // 1-based
  double value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

using SparseRow = std::vector<SparseEntry>;

struct Dataset {
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  int d = 0;
  Task task = Task::Classification;
  /// Set by preprocess; index d holds the constant 1.
  bool has_bias = false;

  std::size_t size() const { return rows.size(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

/// {-1,+1} kept; {0,1} mapped to {-1,+1}; any other two values mapped
/// smaller -> -1, larger -> +1.
inline void normalize_labels(std::vector<double>& labels, const std::string& source) {
  const std::set<double> distinct(labels.begin(), labels.end());
  const bool pm1 = std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 1.0 || v == -1.0; });
  if (pm1) return;
  const bool zero_one = std::all_of(distinct.begin(), distinct.end(), [](double v) { return v == 0.0 || v == 1.0; });
  if (zero_one) {
    for (double& v : labels) v = v == 0.0 ? -1.0 : 1.0;
    return;
  }
  if (distinct.size() != 2) throw Error(source + ": classification labels must take exactly two values");
  const double lo = *distinct.begin();
  for (double& v : labels) v = v == lo ? -1.0 : 1.0;
}

}  // namespace detail

/// Parse LIBSVM text: "label idx:val idx:val ...", 1-based strictly
/// ascending indices, '#' starts a comment. Errors carry source:line.
inline Dataset parse_libsvm(std::istream& in, Task task, const std::string& source = "<stream>") {
  Dataset ds;
  ds.task = task;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) { throw Error(source + ":" + std::to_string(lineno) + ": " + msg); };
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = detail::trim(body);
    if (body.empty()) continue;

    std::vector<std::string_view> tokens;
    std::size_t pos = 0;
    while (pos < body.size()) {
      const auto b = body.find_first_not_of(" \t", pos);
      if (b == std::string_view::npos) break;
      auto e = body.find_first_of(" \t", b);
      if (e == std::string_view::npos) e = body.size();
      tokens.push_back(body.substr(b, e - b));
      pos = e;
    }

    double label = 0.0;
    if (!detail::parse_number(tokens[0], label) || !std::isfinite(label)) {
      fail("malformed label '" + std::string(tokens[0]) + "'");
    }
    SparseRow row;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string_view tok = tokens[k];
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) fail("malformed token '" + std::string(tok) + "'");
      int idx = 0;
      double val = 0.0;
      if (!detail::parse_number(tok.substr(0, colon), idx) || idx < 1) {
        fail("malformed index in '" + std::string(tok) + "'");
      }
      if (!detail::parse_number(tok.substr(colon + 1), val) || !std::isfinite(val)) {
        fail("non-numeric value in '" + std::string(tok) + "'");
      }
      if (!row.empty()) {
        if (idx == row.back().index) fail("duplicate index " + std::to_string(idx));
        if (idx < row.back().index) fail("non-ascending index " + std::to_string(idx));
      }
      row.push_back({idx, val});
      ds.d = std::max(ds.d, idx);
    }
    ds.rows.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  if (task == Task::Classification && !ds.labels.empty()) detail::normalize_labels(ds.labels, source);
  return ds;
}

inline Dataset load_libsvm(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset '" + path + "'");
  return parse_libsvm(in, task, path);
}

inline void write_libsvm(std::ostream& out, const Dataset& ds) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << format_double(ds.labels[i]);
    for (const SparseEntry& e : ds.rows[i]) out << ' ' << e.index << ':' << format_double(e.value);
    out << '\n';
  }
}

/// Divide every feature by its column's max absolute value (all-zero
/// columns untouched) and append a constant bias feature at index d + 1.
/// Idempotent.
inline Dataset preprocess(Dataset ds) {
  if (ds.size() == 0) throw Error("preprocess: dataset is empty");
  std::vector<double> max_abs(static_cast<std::size_t>(ds.d) + 1, 0.0);
  for (const SparseRow& row : ds.rows) {
    for (const SparseEntry& e : row) max_abs[e.index] = std::max(max_abs[e.index], std::abs(e.value));
  }
  for (SparseRow& row : ds.rows) {
    for (SparseEntry& e : row) {
      if (max_abs[e.index] > 0.0) e.value /= max_abs[e.index];
    }
  }
  if (!ds.has_bias) {
    ++ds.d;
    for (SparseRow& row : ds.rows) row.push_back({ds.d, 1.0});
    ds.has_bias = true;
  }
  return ds;
}

inline Vector densify(const SparseRow& row, int d) {
  Vector z = Vector::Zero(d);
  for (const SparseEntry& e : row) {
    if (e.index > d) throw Error("densify: index exceeds dimension");
    z[e.index - 1] = e.value;
  }
  return z;
}

/// Hinge for classification, absolute for regression.
inline Loss example_loss(const Dataset& ds, std::size_t i) {
  Vector z = densify(ds.rows.at(i), ds.d);
  return ds.task == Task::Classification ? Loss::hinge(std::move(z), ds.labels[i])
                                         : Loss::absolute(std::move(z), ds.labels[i]);
}

/// Example order for a repeat: Fisher-Yates driven by mt19937_64 seeded with
/// seed ^ repeat.
inline std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed, std::uint64_t repeat) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ repeat);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

/// Quad1D losses with y_t = 100 sin(pi t / (10 T)), t = 1..T.
inline std::vector<Loss> gen_sine(std::size_t T) {
  if (T == 0) throw Error("gen_sine: T must be positive");
  std::vector<Loss> out;
  out.reserve(T);
  for (std::size_t t = 1; t <= T; ++t) {
    const double y = 100.0 * std::sin(std::numbers::pi * static_cast<double>(t) / (10.0 * static_cast<double>(T)));
    out.push_back(Loss::quad1d(y));
  }
  return out;
}

/// Sequence whose temporal variability is exactly v_target and on which any
/// deterministic learner has regret at least v_target: a linear loss
/// L <g, x> with unit g orthogonal to x1 and L = 2 v_target / D, followed by
/// T - 1 zero losses.
inline std::vector<Loss> gen_lower_bound(double v_target, const MirrorSetup& setup, const Vector& x1, std::size_t T) {
  if (!(v_target >= 0.0) || !std::isfinite(v_target)) throw Error("gen_lower_bound: target must be finite and >= 0");
  if (!setup.bounded()) throw Error("gen_lower_bound: requires a ball domain");
  if (x1.size() < 2) throw Error("gen_lower_bound: dimension must be at least 2");
  if (T == 0) throw Error("gen_lower_bound: T must be positive");
  const Eigen::Index d = x1.size();

  // Gram-Schmidt of the standard basis against x1; the first survivor wins.
  Vector g = Vector::Zero(d);
  const double xn2 = x1.squaredNorm();
  double best = -1.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector e = Vector::Unit(d, j);
    if (xn2 > 0.0) e -= (x1[j] / xn2) * x1;
    const double n = e.norm();
    if (n > best + 1e-12) {
      best = n;
      g = e / n;
    }
    if (n > 0.5) break;
  }
  if (xn2 > 0.0) {
    // one more pass against rounding
    g -= (g.dot(x1) / xn2) * x1;
    g.normalize();
  }

  const double L = 2.0 * v_target / setup.ball_diameter();
  std::vector<Loss> out;
  out.reserve(T);
  out.push_back(Loss::linear(g, L));
  for (std::size_t t = 1; t < T; ++t) out.push_back(Loss::linear(g, 0.0));
  return out;
}

inline std::vector<Loss> gen_fixed(const Loss& loss, std::size_t T) {
  if (T == 0) throw Error("gen_fixed: T must be positive");
  return std::vector<Loss>(T, loss);
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_DATA_HPP
