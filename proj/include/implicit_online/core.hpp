#ifndef IMPLICIT_ONLINE_CORE_HPP
#define IMPLICIT_ONLINE_CORE_HPP

#include <Eigen/Dense>

#include <charconv>
#include <limits>
#include <stdexcept>
#include <string>

namespace implicit_online {

using Vector = Eigen::VectorXd;

/// Raised for every contract violation in the library (bad dimensions,
/// unbounded subproblems, malformed input files, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

namespace detail {

inline void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim) {
    throw Error(std::string(what) + ": dimension mismatch (expected " + std::to_string(dim) +
                ", got " + std::to_string(v.size()) + ")");
  }
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

/// Locale-independent rendering with 17 significant digits; parses back to
/// the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}
}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_CORE_HPP
