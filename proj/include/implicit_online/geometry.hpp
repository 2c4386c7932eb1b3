#ifndef IMPLICIT_ONLINE_GEOMETRY_HPP
#define IMPLICIT_ONLINE_GEOMETRY_HPP

#include "implicit_online/core.hpp"

#include <cmath>
#include <variant>

namespace implicit_online {

/// Distance-generating function. Only psi(x) = 1/2 ||x||_2^2 is provided;
/// it is 1-strongly convex w.r.t. the (self-dual) Euclidean norm.
enum class MirrorMap { Euclidean };

struct Unconstrained {};

/// Origin-centered L2 ball {x : ||x||_2 <= radius}.
struct Ball {
  double radius;
};

using Domain = std::variant<Unconstrained, Ball>;

/// Mirror map plus feasible set. Immutable once built.
class MirrorSetup {
 public:
  static MirrorSetup unconstrained() { return MirrorSetup(Unconstrained{}); }

  static MirrorSetup ball(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw Error("ball radius must be positive and finite");
    }
    return MirrorSetup(Ball{radius});
  }

  MirrorMap mirror_map() const { return MirrorMap::Euclidean; }
  const Domain& domain() const { return domain_; }
  bool bounded() const { return std::holds_alternative<Ball>(domain_); }

  /// Ball radius, +inf when unconstrained.
  double radius() const {
    if (const auto* b = std::get_if<Ball>(&domain_)) return b->radius;
    return kInfinity;
  }

  /// Geometric diameter 2r of the ball (the "D" of the lower bound and of
  /// the synthetic experiment), +inf when unconstrained.
  double ball_diameter() const { return 2.0 * radius(); }

  /// max_{u,x in V} B(u, x). For the Euclidean ball this is 1/2 (2r)^2.
  double bregman_diameter_sq() const {
    const double r = radius();
    return std::isfinite(r) ? 2.0 * r * r : kInfinity;
  }

  bool contains(const Vector& x, double tol = 1e-12) const {
    if (!bounded()) return x.allFinite();
    return x.norm() <= radius() + tol;
  }

 private:
  explicit MirrorSetup(Domain d) : domain_(d) {}
  Domain domain_;
};

inline double bregman(const MirrorSetup& setup, const Vector& u, const Vector& x) {
  (void)setup;
  detail::require_dim(x, u.size(), "bregman");
  return 0.5 * (u - x).squaredNorm();
}

inline Vector project(const MirrorSetup& setup, const Vector& x) {
  if (!setup.bounded()) return x;
  const double r = setup.radius();
  const double n = x.norm();
  if (n <= r) return x;
  Vector p = x * (r / n);
  // the scaled norm can round a few ulps above r
  for (double shrink = std::nextafter(1.0, 0.0); p.norm() > r; shrink = std::nextafter(shrink, 0.0)) {
    p = x * (shrink * r / n);
  }
  return p;
}

/// D^2 = max_{u,x in V} B(u, x); +inf for the unconstrained domain.
inline double bregman_diameter(const MirrorSetup& setup) { return setup.bregman_diameter_sq(); }

/// The AdaImplicit regret bound is stated for beta = D = sqrt(bregman_diameter).
inline double theoretical_beta(const MirrorSetup& setup) {
  if (!setup.bounded()) throw Error("theoretical beta requires a bounded domain");
  return std::sqrt(setup.bregman_diameter_sq());
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_GEOMETRY_HPP
