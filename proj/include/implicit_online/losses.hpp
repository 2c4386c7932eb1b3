#ifndef IMPLICIT_ONLINE_LOSSES_HPP
#define IMPLICIT_ONLINE_LOSSES_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace implicit_online {

/// max(1 - y <z, x>, 0), y in {-1, +1}.
struct Hinge {
  Vector z;
  double y;
};

/// |<z, x> - y|.
struct Absolute {
  Vector z;
  double y;
};

/// 1/2 (<z, x> - y)^2. The 1/2 makes the standard closed-form prox exact.
struct Square {
  Vector z;
  double y;
};

/// 1/4 (x - y)^2 on the real line.
struct Quad1D {
  double y;
};

/// scale * <g, x>, scale >= 0.
struct Linear {
  Vector g;
  double scale;
};

/// A convex loss, optionally shifted by a constant. Immutable.
class Loss {
 public:
  using Kind = std::variant<Hinge, Absolute, Square, Quad1D, Linear>;

  static Loss hinge(Vector z, double y) {
    check_features(z, "hinge");
    if (y != 1.0 && y != -1.0) throw Error("hinge label must be -1 or +1");
    return Loss(Hinge{std::move(z), y});
  }
  static Loss absolute(Vector z, double y) {
    check_features(z, "absolute");
    check_finite(y, "absolute target");
    return Loss(Absolute{std::move(z), y});
  }
  static Loss square(Vector z, double y) {
    check_features(z, "square");
    check_finite(y, "square target");
    return Loss(Square{std::move(z), y});
  }
  static Loss quad1d(double y) {
    check_finite(y, "quad1d target");
    return Loss(Quad1D{y});
  }
  static Loss linear(Vector g, double scale) {
    if (g.size() == 0 || !g.allFinite()) throw Error("linear: direction must be finite and non-empty");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw Error("linear: scale must be finite and >= 0");
    return Loss(Linear{std::move(g), scale});
  }

  const Kind& kind() const { return kind_; }
  double offset() const { return offset_; }

  /// Same loss plus a constant.
  Loss shifted(double c) const {
    Loss out = *this;
    out.offset_ += c;
    return out;
  }

  Eigen::Index dimension() const {
    return std::visit(
        [](const auto& k) -> Eigen::Index {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Quad1D>) {
            return 1;
          } else if constexpr (std::is_same_v<T, Linear>) {
            return k.g.size();
          } else {
            return k.z.size();
          }
        },
        kind_);
  }

  const char* family() const {
    static constexpr const char* names[] = {"hinge", "absolute", "square", "quad1d", "linear"};
    return names[kind_.index()];
  }

  friend bool operator==(const Loss& a, const Loss& b) {
    if (a.kind_.index() != b.kind_.index() || a.offset_ != b.offset_) return false;
    return std::visit(
        [&](const auto& ka) {
          using T = std::decay_t<decltype(ka)>;
          const auto& kb = std::get<T>(b.kind_);
          if constexpr (std::is_same_v<T, Quad1D>) {
            return ka.y == kb.y;
          } else if constexpr (std::is_same_v<T, Linear>) {
            return ka.scale == kb.scale && ka.g.size() == kb.g.size() && ka.g == kb.g;
          } else {
            return ka.y == kb.y && ka.z.size() == kb.z.size() && ka.z == kb.z;
          }
        },
        a.kind_);
  }

 private:
  explicit Loss(Kind k) : kind_(std::move(k)) {}

  static void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw Error(std::string(what) + " must be finite");
  }
  static void check_features(const Vector& z, const char* what) {
    if (z.size() == 0 || !z.allFinite() || z.squaredNorm() == 0.0) {
      throw Error(std::string(what) + ": feature vector must be nonzero and finite");
    }
  }

  Kind kind_;
  double offset_ = 0.0;
};

// ---------------------------------------------------------------------------
// Linear-prediction view: every family is phi(<z, x>) + offset for a scalar
// convex phi. Quad1D uses z = (1); Linear uses z = g and phi(w) = scale * w.

enum class Link { Hinge, Absolute, Square, QuarterSquare, Identity };

struct LinearPrediction {
  Vector z;
  Link link;
  double target;  // y for every link except Identity
  double scale;   // Identity only
  double offset;
};

inline LinearPrediction linear_prediction(const Loss& loss) {
  return std::visit(
      [&](const auto& k) -> LinearPrediction {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Hinge>) {
          return {k.z, Link::Hinge, k.y, 0.0, loss.offset()};
        } else if constexpr (std::is_same_v<T, Absolute>) {
          return {k.z, Link::Absolute, k.y, 0.0, loss.offset()};
        } else if constexpr (std::is_same_v<T, Square>) {
          return {k.z, Link::Square, k.y, 0.0, loss.offset()};
        } else if constexpr (std::is_same_v<T, Quad1D>) {
          return {Vector::Ones(1), Link::QuarterSquare, k.y, 0.0, loss.offset()};
        } else {
          return {k.g, Link::Identity, 0.0, k.scale, loss.offset()};
        }
      },
      loss.kind());
}

/// phi(w), without the offset.
inline double link_value(Link link, double target, double scale, double w) {
  switch (link) {
    case Link::Hinge:
      return std::max(1.0 - target * w, 0.0);
    case Link::Absolute:
      return std::abs(w - target);
    case Link::Square:
      return 0.5 * (w - target) * (w - target);
    case Link::QuarterSquare:
      return 0.25 * (w - target) * (w - target);
    case Link::Identity:
      return scale * w;
  }
  return 0.0;
}

/// Minimum-norm element of the subdifferential of phi at w.
inline double link_derivative(Link link, double target, double scale, double w) {
  switch (link) {
    case Link::Hinge:
      return (1.0 - target * w > 0.0) ? -target : 0.0;
    case Link::Absolute: {
      const double r = w - target;
      return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    }
    case Link::Square:
      return w - target;
    case Link::QuarterSquare:
      return 0.5 * (w - target);
    case Link::Identity:
      return scale;
  }
  return 0.0;
}

inline double eval(const Loss& loss, const Vector& x) {
  detail::require_dim(x, loss.dimension(), "eval");
  return std::visit(
             [&](const auto& k) -> double {
               using T = std::decay_t<decltype(k)>;
               if constexpr (std::is_same_v<T, Hinge>) {
                 return std::max(1.0 - k.y * k.z.dot(x), 0.0);
               } else if constexpr (std::is_same_v<T, Absolute>) {
                 return std::abs(k.z.dot(x) - k.y);
               } else if constexpr (std::is_same_v<T, Square>) {
                 const double r = k.z.dot(x) - k.y;
                 return 0.5 * r * r;
               } else if constexpr (std::is_same_v<T, Quad1D>) {
                 const double r = x[0] - k.y;
                 return 0.25 * r * r;
               } else {
                 return k.scale * k.g.dot(x);
               }
             },
             loss.kind()) +
         loss.offset();
}

/// One element of the subdifferential; the minimum-norm one at kinks.
inline Vector subgradient(const Loss& loss, const Vector& x) {
  detail::require_dim(x, loss.dimension(), "subgradient");
  return std::visit(
      [&](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Hinge>) {
          if (1.0 - k.y * k.z.dot(x) > 0.0) return -k.y * k.z;
          return Vector::Zero(k.z.size());
        } else if constexpr (std::is_same_v<T, Absolute>) {
          const double r = k.z.dot(x) - k.y;
          if (r > 0.0) return k.z;
          if (r < 0.0) return -k.z;
          return Vector::Zero(k.z.size());
        } else if constexpr (std::is_same_v<T, Square>) {
          return (k.z.dot(x) - k.y) * k.z;
        } else if constexpr (std::is_same_v<T, Quad1D>) {
          return Vector::Constant(1, 0.5 * (x[0] - k.y));
        } else {
          return k.scale * k.g;
        }
      },
      loss.kind());
}

/// sup of ||g|| over subgradients at points of the domain.
inline double lipschitz_bound(const Loss& loss, const MirrorSetup& setup) {
  const double r = setup.radius();
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Hinge> || std::is_same_v<T, Absolute>) {
          return k.z.norm();
        } else if constexpr (std::is_same_v<T, Square>) {
          const double zn = k.z.norm();
          return zn * (zn * r + std::abs(k.y));
        } else if constexpr (std::is_same_v<T, Quad1D>) {
          return 0.5 * (r + std::abs(k.y));
        } else {
          return k.scale * k.g.norm();
        }
      },
      loss.kind());
}

// ---------------------------------------------------------------------------
// Temporal variability terms: max_{x in V} curr(x) - prev(x).

struct VariabilityOptions {
  /// Grid resolution for two-dimensional pairs without closed form.
  std::size_t grid_points_per_dim = 10000;
};

namespace detail {

/// b . x + c
struct AffineDifference {
  Vector slope;
  double constant;
};

inline std::optional<AffineDifference> affine_difference(const Loss& curr, const Loss& prev) {
  const double dc = curr.offset() - prev.offset();
  if (const auto* a = std::get_if<Linear>(&curr.kind())) {
    if (const auto* b = std::get_if<Linear>(&prev.kind())) {
      return AffineDifference{a->scale * a->g - b->scale * b->g, dc};
    }
  }
  if (const auto* a = std::get_if<Quad1D>(&curr.kind())) {
    if (const auto* b = std::get_if<Quad1D>(&prev.kind())) {
      // 1/4 (x - a)^2 - 1/4 (x - b)^2 = 1/4 (a^2 - b^2) - 1/2 (a - b) x
      return AffineDifference{Vector::Constant(1, -0.5 * (a->y - b->y)),
                              0.25 * (a->y * a->y - b->y * b->y) + dc};
    }
  }
  if (const auto* a = std::get_if<Square>(&curr.kind())) {
    if (const auto* b = std::get_if<Square>(&prev.kind())) {
      if (a->z.size() == b->z.size() && a->z == b->z) {
        return AffineDifference{-(a->y - b->y) * a->z, 0.5 * (a->y * a->y - b->y * b->y) + dc};
      }
    }
  }
  return std::nullopt;
}

/// Coefficients (a, b, c) of phi(w) = a w^2 + b w + c on the smooth piece
/// containing w0 (w0 must not sit on a kink).
struct Quadratic {
  double a = 0.0, b = 0.0, c = 0.0;
};

inline Quadratic local_piece(const LinearPrediction& lp, double w0) {
  const double y = lp.target;
  switch (lp.link) {
    case Link::Hinge:
      if (1.0 - y * w0 > 0.0) return {0.0, -y, 1.0};
      return {};
    case Link::Absolute: {
      const double s = (w0 - y) >= 0.0 ? 1.0 : -1.0;
      return {0.0, s, -s * y};
    }
    case Link::Square:
      return {0.5, -y, 0.5 * y * y};
    case Link::QuarterSquare:
      return {0.25, -0.5 * y, 0.25 * y * y};
    case Link::Identity:
      return {0.0, lp.scale, 0.0};
  }
  return {};
}

inline std::optional<double> kink(const LinearPrediction& lp) {
  switch (lp.link) {
    case Link::Hinge:
      return 1.0 / lp.target;
    case Link::Absolute:
      return lp.target;
    default:
      return std::nullopt;
  }
}

/// Exact max over [-r, r] of a difference of two one-dimensional losses,
/// which is piecewise quadratic between the kinks of either loss.
inline double max_difference_1d(const Loss& curr, const Loss& prev, double r) {
  const LinearPrediction pc = linear_prediction(curr);
  const LinearPrediction pp = linear_prediction(prev);
  std::vector<double> breaks{-r, r};
  for (const LinearPrediction* lp : {&pc, &pp}) {
    if (auto w = kink(*lp)) {
      const double x = *w / lp->z[0];
      if (x > -r && x < r) breaks.push_back(x);
    }
  }
  std::sort(breaks.begin(), breaks.end());
  auto diff = [&](double x) {
    Vector v(1);
    v[0] = x;
    return eval(curr, v) - eval(prev, v);
  };
  double best = -kInfinity;
  for (double x : breaks) best = std::max(best, diff(x));
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i], hi = breaks[i + 1];
    if (!(hi > lo)) continue;
    const double mid = 0.5 * (lo + hi);
    const Quadratic qc = local_piece(pc, pc.z[0] * mid);
    const Quadratic qp = local_piece(pp, pp.z[0] * mid);
    // in x: a z^2 x^2 + b z x + c
    const double zc = pc.z[0], zp = pp.z[0];
    const double a = qc.a * zc * zc - qp.a * zp * zp;
    const double b = qc.b * zc - qp.b * zp;
    if (a < 0.0) {
      const double v = -b / (2.0 * a);
      if (v > lo && v < hi) best = std::max(best, diff(v));
    }
  }
  return best;
}

/// Grid maximization on the disk of radius r. A lower bound on the true
/// maximum, with error at most Lip(diff) * r * sqrt(2) * 2 / (points - 1).
inline double max_difference_2d_grid(const Loss& curr, const Loss& prev, double r, std::size_t points) {
  const LinearPrediction pc = linear_prediction(curr);
  const LinearPrediction pp = linear_prediction(prev);
  auto diff = [&](double x0, double x1) {
    const double wc = pc.z[0] * x0 + pc.z[1] * x1;
    const double wp = pp.z[0] * x0 + pp.z[1] * x1;
    return link_value(pc.link, pc.target, pc.scale, wc) + pc.offset -
           link_value(pp.link, pp.target, pp.scale, wp) - pp.offset;
  };
  const std::size_t n = std::max<std::size_t>(points, 2);
  const double h = 2.0 * r / static_cast<double>(n - 1);
  double best = -kInfinity;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = -r + h * static_cast<double>(i);
    const double span = std::sqrt(std::max(r * r - x0 * x0, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      const double x1 = -r + h * static_cast<double>(j);
      if (std::abs(x1) > span) continue;
      best = std::max(best, diff(x0, x1));
    }
  }
  // the boundary circle is where most maxima live; sample it as densely
  const std::size_t m = 4 * n;
  for (std::size_t k = 0; k < m; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
    best = std::max(best, diff(r * std::cos(th), r * std::sin(th)));
  }
  return best;
}

}  // namespace detail

/// max_{x in V} curr(x) - prev(x).
///
/// Exact whenever the difference is affine (linear pairs, quad1d pairs,
/// square pairs sharing z) or the problem is one-dimensional. Two-dimensional
/// non-affine pairs fall back to a grid over the disk; higher dimensions are
/// rejected.
inline double pairwise_variability_term(const Loss& curr, const Loss& prev, const MirrorSetup& setup,
                                        const VariabilityOptions& opts = {}) {
  if (curr.dimension() != prev.dimension()) throw Error("variability: dimension mismatch");
  if (curr == prev) return 0.0;

  if (auto aff = detail::affine_difference(curr, prev)) {
    const double sn = aff->slope.norm();
    if (setup.bounded()) return aff->constant + setup.radius() * sn;
    if (sn == 0.0) return aff->constant;
    throw Error("variability undefined: difference is unbounded above on an unconstrained domain");
  }
  if (!setup.bounded()) {
    throw Error("variability undefined: non-affine difference on an unconstrained domain");
  }
  const Eigen::Index d = curr.dimension();
  if (d == 1) return detail::max_difference_1d(curr, prev, setup.radius());
  if (d == 2) return detail::max_difference_2d_grid(curr, prev, setup.radius(), opts.grid_points_per_dim);
  throw Error("variability unsupported: non-affine pair in dimension > 2");
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_LOSSES_HPP
