#ifndef IMPLICIT_ONLINE_PROX_HPP
#define IMPLICIT_ONLINE_PROX_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

namespace implicit_online {

/// Outcome of x_next = argmin_{x in V} 1/2 ||x - x_t||^2 + eta * loss(x).
struct ProxResult {
  Vector x_next;
  /// Element of the subdifferential at x_next satisfying the first-order
  /// optimality condition together with the ball multiplier:
  /// x_next = x_t - eta * g_prime - alpha * x_next.
  Vector g_prime;
  /// Ball multiplier, 0 when the unconstrained minimizer is feasible.
  double alpha = 0.0;
  int iterations = 0;
};

/// A candidate prox point and the subgradient that certifies it.
struct StepPoint {
  Vector x;
  Vector g_prime;
};

/// Closed-form unconstrained implicit step for a finite, positive rate.
inline StepPoint closed_form_step(const Loss& loss, const Vector& x, double eta) {
  return std::visit(
      [&](const auto& k) -> StepPoint {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, Hinge>) {
          const double zz = k.z.squaredNorm();
          const double margin = std::max(1.0 - k.y * k.z.dot(x), 0.0);
          const double tau = std::min(eta, margin / zz);
          // tau < eta means the step stops on the margin; the kink element
          // -(tau/eta) y z reproduces the displacement exactly
          return {x + (tau * k.y) * k.z, (-(tau / eta) * k.y) * k.z};
        } else if constexpr (std::is_same_v<T, Absolute>) {
          const double zz = k.z.squaredNorm();
          const double r = k.z.dot(x) - k.y;
          const double s = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
          const double tau = std::min(eta, std::abs(r) / zz);
          return {x - (tau * s) * k.z, ((tau / eta) * s) * k.z};
        } else if constexpr (std::is_same_v<T, Square>) {
          const double zz = k.z.squaredNorm();
          const double r = k.z.dot(x) - k.y;
          const double shrink = 1.0 / (1.0 + eta * zz);
          return {x - (eta * r * shrink) * k.z, (r * shrink) * k.z};
        } else if constexpr (std::is_same_v<T, Quad1D>) {
          // g' = (x' - y)/2 = (x - y)/(2 + eta); stepping with it keeps the
          // stationarity residual free of cancellation
          const double gp = (x[0] - k.y) / (2.0 + eta);
          return {Vector::Constant(1, x[0] - eta * gp), Vector::Constant(1, gp)};
        } else {
          return {x - (eta * k.scale) * k.g, k.scale * k.g};
        }
      },
      loss.kind());
}

struct BallSearchOptions {
  double rel_tol = 1e-10;
  int max_iterations = 400;
  double alpha_cap = 1152921504606846976.0;  // 2^60
  int monotonicity_probes = 16;
};

struct BallAlphaSolution {
  double alpha;
  Vector x_next;
  Vector g_prime;
  int iterations;
};

/// Smallest alpha >= 0 such that the closed form evaluated at
/// (x_t / (1 + alpha), eta / (1 + alpha)) lands on the sphere of the given
/// radius. `closed_form(x, eta)` must return a StepPoint.
///
/// The norm of that point is non-increasing in alpha (it is the minimizer of
/// the prox objective plus alpha/2 ||x||^2); this is checked on a probe grid
/// over the bracket before bisecting.
template <class ClosedForm>
BallAlphaSolution solve_ball_alpha(ClosedForm&& closed_form, const Vector& x_t, double eta, double radius,
                                   const BallSearchOptions& opts = {}) {
  auto at = [&](double alpha) -> StepPoint {
    const double s = 1.0 / (1.0 + alpha);
    return closed_form(Vector(x_t * s), eta * s);
  };
  const double tol = opts.rel_tol * radius;

  if (at(0.0).x.norm() <= radius) {
    throw Error("solve_ball_alpha: the alpha = 0 point is already feasible");
  }

  int iterations = 0;
  double lo = 0.0;
  double hi = 1.0;
  StepPoint best = at(hi);
  while (best.x.norm() > radius) {
    lo = hi;
    hi *= 2.0;
    if (hi > opts.alpha_cap) {
      throw Error("solve_ball_alpha: no bracket found below alpha = 2^60");
    }
    best = at(hi);
    ++iterations;
  }

  const double slack = 1e-12 * std::max(1.0, radius);
  double prev = at(lo).x.norm();
  for (int k = 1; k <= opts.monotonicity_probes; ++k) {
    const double a = lo + (hi - lo) * static_cast<double>(k) / opts.monotonicity_probes;
    const double n = at(a).x.norm();
    if (n > prev + slack) {
      throw Error("solve_ball_alpha: iterate norm is not monotone in alpha");
    }
    prev = n;
  }

  // bisect to (near) full precision in alpha; tol only gates acceptance
  while (hi - lo > 0x1p-60 * std::max(1.0, hi)) {
    if (iterations++ >= opts.max_iterations) break;
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    StepPoint p = at(mid);
    if (p.x.norm() > radius) {
      lo = mid;
    } else {
      hi = mid;
      best = std::move(p);
    }
  }
  const double residual = std::abs(best.x.norm() - radius);
  if (residual > tol) {
    throw Error("solve_ball_alpha: did not converge (residual " + std::to_string(residual) + ")");
  }
  return {hi, std::move(best.x), std::move(best.g_prime), iterations};
}

/// Limit of the prox as eta -> infinity: the minimizer of the loss over V
/// closest to x_t.
inline Vector minimum_displacement_minimizer(const Loss& loss, const Vector& x_t, const MirrorSetup& setup) {
  const LinearPrediction lp = linear_prediction(loss);
  const double zz = lp.z.squaredNorm();
  if (zz == 0.0) return x_t;
  const double zn = std::sqrt(zz);
  const double w_t = lp.z.dot(x_t);
  const double reach = setup.bounded() ? setup.radius() * zn : kInfinity;

  // argmin of phi over the reals, as an interval [lo, hi]
  double lo = -kInfinity, hi = kInfinity;
  switch (lp.link) {
    case Link::Hinge:
      if (lp.target > 0.0) {
        lo = 1.0;
      } else {
        hi = -1.0;
      }
      break;
    case Link::Absolute:
    case Link::Square:
    case Link::QuarterSquare:
      lo = hi = lp.target;
      break;
    case Link::Identity:
      if (lp.scale == 0.0) return x_t;
      if (!setup.bounded()) throw Error("prox unbounded: linear loss with infinite rate on an unconstrained domain");
      lo = hi = -reach;
      break;
  }
  // phi is monotone on either side of its argmin, so over [-reach, reach]
  // the minimizers are the intersection or else the nearest endpoint
  double flo = std::max(lo, -reach), fhi = std::min(hi, reach);
  if (flo > fhi) {
    flo = fhi = (hi < -reach) ? -reach : reach;
  }
  const double w_star = std::clamp(w_t, flo, fhi);
  Vector x = x_t + ((w_star - w_t) / zz) * lp.z;
  if (!setup.bounded()) return x;

  // project x_t onto {<z, x> = w_star} intersected with the ball: keep the
  // z-component and shrink the orthogonal part radially
  const double r = setup.radius();
  const Vector zhat = lp.z / zn;
  const double c = w_star / zn;
  Vector orth = x - c * zhat;
  const double cap = std::sqrt(std::max(r * r - c * c, 0.0));
  const double on = orth.norm();
  if (on > cap) orth *= (on > 0.0 ? cap / on : 0.0);
  return project(setup, Vector(c * zhat + orth));
}

/// Implicit (proximal) step over the feasible set. `eta` may be +inf, which
/// selects minimum_displacement_minimizer.
inline ProxResult implicit_step(const Loss& loss, const Vector& x_t, double eta, const MirrorSetup& setup,
                                const BallSearchOptions& opts = {}) {
  detail::require_dim(x_t, loss.dimension(), "implicit_step");
  if (!(eta > 0.0)) throw Error("implicit_step: rate must be positive");

  if (std::isinf(eta)) {
    Vector x = minimum_displacement_minimizer(loss, x_t, setup);
    Vector g = subgradient(loss, x);
    return {std::move(x), std::move(g), 0.0, 0};
  }

  StepPoint free_step = closed_form_step(loss, x_t, eta);
  if (!setup.bounded()) return {std::move(free_step.x), std::move(free_step.g_prime), 0.0, 0};

  const double r = setup.radius();
  if (free_step.x.norm() <= r + 1e-12) {
    return {project(setup, free_step.x), std::move(free_step.g_prime), 0.0, 0};
  }
  BallAlphaSolution sol = solve_ball_alpha(
      [&](const Vector& x, double e) { return closed_form_step(loss, x, e); }, x_t, eta, r, opts);
  return {std::move(sol.x_next), std::move(sol.g_prime), sol.alpha, sol.iterations};
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_PROX_HPP
