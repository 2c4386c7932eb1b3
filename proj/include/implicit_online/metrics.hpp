#ifndef IMPLICIT_ONLINE_METRICS_HPP
#define IMPLICIT_ONLINE_METRICS_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/learners.hpp"
#include "implicit_online/losses.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace implicit_online {

inline double cumulative_loss(const Trace& trace) {
  double s = 0.0;
  for (const StepRecord& r : trace.records) s += r.loss_value;
  return s;
}

inline double total_loss(std::span<const Loss> losses, const Vector& u) {
  double s = 0.0;
  for (const Loss& l : losses) s += eval(l, u);
  return s;
}

/// sum_t loss_t(x_t) - loss_t(u)
inline double regret(const Trace& trace, std::span<const Loss> losses, const Vector& u) {
  if (trace.records.size() != losses.size()) throw Error("regret: trace and loss sequence lengths differ");
  double s = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    detail::require_dim(u, losses[t].dimension(), "regret");
    // offsets cancel termwise
    s += trace.records[t].loss_value - eval(losses[t], u);
  }
  return s;
}

/// sum_{t >= 2} max_{x in V} loss_t(x) - loss_{t-1}(x); signed, as defined.
inline double temporal_variability(std::span<const Loss> losses, const MirrorSetup& setup,
                                   const VariabilityOptions& opts = {}) {
  double v = 0.0;
  for (std::size_t t = 1; t < losses.size(); ++t) {
    v += pairwise_variability_term(losses[t], losses[t - 1], setup, opts);
  }
  return v;
}

struct ComparatorOptions {
  /// Projected-subgradient iterations for multi-dimensional sequences.
  int iterations = 100000;
  int polish_sweeps = 4;
};

namespace detail {

inline Vector total_subgradient(std::span<const Loss> losses, const Vector& x) {
  Vector g = Vector::Zero(x.size());
  for (const Loss& l : losses) g += subgradient(l, x);
  return g;
}

/// Golden-section minimization of a convex f on [a, b].
template <class F>
double golden_section(F&& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 400 && (b - a) > tol; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline Vector best_comparator_1d(std::span<const Loss> losses, const MirrorSetup& setup) {
  auto F = [&](double x) { return total_loss(losses, Vector::Constant(1, x)); };
  double lo, hi;
  if (setup.bounded()) {
    lo = -setup.radius();
    hi = setup.radius();
  } else {
    // convexity: F(R) >= F(R/2) means F is nondecreasing beyond R
    double R = 1.0;
    while (F(R) < F(0.5 * R) || F(-R) < F(-0.5 * R)) {
      R *= 2.0;
      if (R > 1e18) throw Error("comparator: total loss is unbounded below");
    }
    lo = -R;
    hi = R;
  }
  double u = golden_section(F, lo, hi, 1e-12 * std::max(1.0, hi - lo));
  // grid refinement around the golden-section point
  double fu = F(u);
  const double w = 1e-6 * std::max(1.0, hi - lo);
  for (int k = -50; k <= 50; ++k) {
    const double x = std::clamp(u + w * k / 50.0, lo, hi);
    const double fx = F(x);
    if (fx < fu) {
      fu = fx;
      u = x;
    }
  }
  for (double x : {lo, hi}) {
    const double fx = F(x);
    if (fx < fu) {
      fu = fx;
      u = x;
    }
  }
  if (0.0 >= lo && 0.0 <= hi && F(0.0) <= fu) u = 0.0;
  return Vector::Constant(1, u);
}

inline Vector best_comparator_nd(std::span<const Loss> losses, const MirrorSetup& setup,
                                 const ComparatorOptions& opts) {
  const Eigen::Index d = losses.front().dimension();
  auto F = [&](const Vector& x) { return total_loss(losses, x); };
  double G = 0.0;
  for (const Loss& l : losses) G += lipschitz_bound(l, setup);
  const double scale = setup.bounded() ? 2.0 * setup.radius() : 1.0;
  const double c = G > 0.0 ? scale / G : 1.0;

  Vector x = Vector::Zero(d);
  Vector avg = Vector::Zero(d);
  Vector best = x;
  double f_best = F(x);
  for (int k = 1; k <= opts.iterations; ++k) {
    const Vector g = total_subgradient(losses, x);
    if (g.squaredNorm() == 0.0) break;
    x = project(setup, Vector(x - (c / std::sqrt(static_cast<double>(k))) * g));
    avg += (x - avg) / static_cast<double>(k);
    if ((k & 255) == 0 || k == opts.iterations) {
      for (const Vector* cand : {&x, &avg}) {
        const double f = F(*cand);
        if (f < f_best) {
          f_best = f;
          best = *cand;
        }
      }
    }
  }
  // coordinate polish with golden-section line searches
  double step = 0.1 * scale;
  for (int sweep = 0; sweep < opts.polish_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < d; ++j) {
      auto line = [&](double s) {
        Vector y = best;
        y[j] += s;
        return F(project(setup, y));
      };
      const double s = golden_section(line, -step, step, 1e-13 * scale);
      Vector y = best;
      y[j] += s;
      y = project(setup, y);
      const double f = F(y);
      if (f < f_best) {
        f_best = f;
        best = y;
      }
    }
    step *= 0.1;
  }
  if (F(Vector::Zero(d)) <= f_best) best.setZero();
  return best;
}

}  // namespace detail

/// Fixed point of V minimizing the cumulative loss. All-linear sequences are
/// solved in closed form, one-dimensional ones by golden section with grid
/// refinement, others by averaged projected subgradient plus a coordinate
/// polish. Ties at the origin resolve to the origin.
inline Vector best_fixed_comparator(std::span<const Loss> losses, const MirrorSetup& setup,
                                    const ComparatorOptions& opts = {}) {
  if (losses.empty()) throw Error("comparator: empty sequence");
  const Eigen::Index d = losses.front().dimension();
  for (const Loss& l : losses) {
    if (l.dimension() != d) throw Error("comparator: dimension mismatch");
  }
  const bool all_linear = std::all_of(losses.begin(), losses.end(),
                                      [](const Loss& l) { return std::holds_alternative<Linear>(l.kind()); });
  if (all_linear) {
    Vector s = Vector::Zero(d);
    for (const Loss& l : losses) {
      const auto& k = std::get<Linear>(l.kind());
      s += k.scale * k.g;
    }
    const double n = s.norm();
    if (n == 0.0) return Vector::Zero(d);
    if (!setup.bounded()) throw Error("comparator: total loss is unbounded below");
    return project(setup, Vector(-(setup.radius() / n) * s));
  }
  if (d == 1) return detail::best_comparator_1d(losses, setup);
  return detail::best_comparator_nd(losses, setup, opts);
}

/// A checked inequality lhs <= rhs evaluated on a trace.
struct BoundCertificate {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool holds = false;
  bool in_scope = true;
  std::string note;
};

inline constexpr double kCertificateTolerance = 1e-6;

inline BoundCertificate make_certificate(std::string name, double lhs, double rhs,
                                         double tol = kCertificateTolerance) {
  BoundCertificate c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = rhs - lhs;
  c.holds = c.slack >= -tol;
  return c;
}

inline BoundCertificate out_of_scope(std::string name, std::string why) {
  BoundCertificate c;
  c.name = std::move(name);
  c.lhs = c.rhs = c.slack = std::numeric_limits<double>::quiet_NaN();
  c.holds = false;
  c.in_scope = false;
  c.note = "out of theorem scope: " + std::move(why);
  return c;
}

namespace detail {

inline double first_minus_last(const Trace& trace) {
  return trace.records.front().loss_value - trace.records.back().loss_next;
}

inline std::string adaimplicit_scope_problem(const Trace& trace) {
  const LearnerConfig& cfg = trace.config;
  if (cfg.algorithm != Algorithm::AdaImplicit) return "trace is not from AdaImplicit";
  if (!cfg.setup.bounded()) return "domain is unbounded";
  const double want = theoretical_beta(cfg.setup);
  if (std::abs(cfg.beta - want) > 1e-12 * want) return "beta differs from the Bregman diameter root";
  return {};
}

}  // namespace detail

/// AdaImplicit with beta = D:
///   R_T(u) <= min{2 (l_1(x_1) - l_T(x_{T+1}) + V_T), 2 D sqrt(3 sum ||g_t||^2)}.
inline BoundCertificate certify_adaimplicit(const Trace& trace, std::span<const Loss> losses,
                                            const MirrorSetup& setup, const Vector& u,
                                            const VariabilityOptions& vopts = {}) {
  const char* name = "adaimplicit_regret";
  if (auto why = detail::adaimplicit_scope_problem(trace); !why.empty()) return out_of_scope(name, why);
  const double D = theoretical_beta(setup);
  const double vt = temporal_variability(losses, setup, vopts);
  double g2 = 0.0;
  for (const StepRecord& r : trace.records) g2 += r.g_norm * r.g_norm;
  const double arm_variability = 2.0 * (detail::first_minus_last(trace) + vt);
  const double arm_gradient = 2.0 * D * std::sqrt(3.0 * g2);
  BoundCertificate c = make_certificate(name, regret(trace, losses, u), std::min(arm_variability, arm_gradient));
  c.note = "V_T=" + std::to_string(vt);
  return c;
}

/// lambda_{T+1} beta^2 <= l_1(x_1) - l_T(x_{T+1}) + V_T.
inline BoundCertificate certify_adaimplicit_lambda(const Trace& trace, std::span<const Loss> losses,
                                                   const MirrorSetup& setup, const VariabilityOptions& vopts = {}) {
  const char* name = "adaimplicit_lambda";
  if (trace.config.algorithm != Algorithm::AdaImplicit) return out_of_scope(name, "trace is not from AdaImplicit");
  const double vt = temporal_variability(losses, setup, vopts);
  const double beta = trace.config.beta;
  return make_certificate(name, trace.lambda_final * beta * beta, detail::first_minus_last(trace) + vt);
}

/// Constant rate: R_T(u) <= B(u, x_1)/eta + l_1(x_1) - l_T(x_{T+1}) + V_T.
inline BoundCertificate certify_constant_rate(const Trace& trace, std::span<const Loss> losses,
                                              const MirrorSetup& setup, const Vector& u,
                                              const VariabilityOptions& vopts = {}) {
  const char* name = "constant_rate_variability";
  if (trace.config.algorithm != Algorithm::ImplicitConst) return out_of_scope(name, "trace is not from ImplicitConst");
  const double eta = trace.config.eta_const;
  const double rhs = bregman(setup, u, trace.config.x_init) / eta + detail::first_minus_last(trace) +
                     temporal_variability(losses, setup, vopts);
  return make_certificate(name, regret(trace, losses, u), rhs);
}

/// R_T(u) <= sum (B(u,x_t) - B(u,x_{t+1}))/eta_t + sum eta_t ||g_t|| min(2||g'_t||, ||g_t||/2).
inline BoundCertificate certify_iomd_minimum(const Trace& trace, std::span<const Loss> losses,
                                             const MirrorSetup& setup, const Vector& u) {
  const char* name = "iomd_minimum";
  const Algorithm a = trace.config.algorithm;
  if (a != Algorithm::ImplicitDecay && a != Algorithm::ImplicitConst) {
    return out_of_scope(name, "trace is not from a fixed-schedule implicit learner");
  }
  double rhs = 0.0;
  const std::size_t T = trace.records.size();
  for (std::size_t t = 0; t < T; ++t) {
    const StepRecord& r = trace.records[t];
    const Vector& x_next = t + 1 < T ? trace.records[t + 1].x_t : trace.x_final;
    rhs += (bregman(setup, u, r.x_t) - bregman(setup, u, x_next)) / r.rate;
    rhs += r.rate * r.g_norm * std::min(2.0 * r.g_prime_norm, 0.5 * r.g_norm);
  }
  return make_certificate(name, regret(trace, losses, u), rhs);
}

/// Doubling-trick certificates: the general Lipschitz bound, the fixed-loss
/// bound when the sequence is constant and stayed in its first epoch, and
/// the epoch-count bound.
inline std::vector<BoundCertificate> certify_doubling(const Trace& trace, std::span<const Loss> losses,
                                                      const MirrorSetup& setup, const Vector& u) {
  std::vector<BoundCertificate> out;
  const LearnerConfig& cfg = trace.config;
  if (cfg.algorithm != Algorithm::DoublingImplicit) {
    out.push_back(out_of_scope("doubling_general", "trace is not from DoublingImplicit"));
    return out;
  }
  const double L = cfg.lipschitz;
  const double beta = cfg.beta;
  const double R = regret(trace, losses, u);
  const double T = static_cast<double>(trace.records.size());
  const double b = bregman(setup, u, cfg.x_init);

  double max_g = 0.0;
  for (const StepRecord& r : trace.records) max_g = std::max(max_g, r.g_norm);
  if (max_g > L * (1.0 + 1e-12)) {
    out.push_back(out_of_scope("doubling_general", "observed subgradient norm exceeds L"));
  } else {
    const double c = std::sqrt(2.0) / (std::sqrt(2.0) - 1.0);
    out.push_back(make_certificate("doubling_general", R,
                                   c * (b / beta + beta) * L * std::sqrt(T + 1.0) + c * beta * L / 2.0));
  }

  const bool fixed = std::all_of(losses.begin(), losses.end(), [&](const Loss& l) { return l == losses.front(); });
  if (fixed) {
    if (trace.restarts == 0) {
      const double rhs = (L / beta) * b + trace.records.front().loss_value - trace.records.back().loss_value;
      out.push_back(make_certificate("doubling_fixed_loss", R, rhs));
    } else {
      out.push_back(out_of_scope("doubling_fixed_loss", "the run left its first epoch"));
    }
  }

  // per-epoch sums of delta and delta / eta_i
  double sum_delta = 0.0, sum_scaled = 0.0;
  for (const StepRecord& r : trace.records) {
    sum_delta += r.delta_t;
    sum_scaled += r.delta_t / r.rate;
  }
  const double N = static_cast<double>(trace.restarts);
  const double arm1 = std::log2(sum_scaled / (L * L) + 1.0);
  const double arm2 = 2.0 * std::log2((std::sqrt(2.0) - 1.0) / (beta * L) * sum_delta + 1.0);
  BoundCertificate epochs = make_certificate("doubling_epochs", N, std::min(arm1, arm2), 1e-9);
  epochs.note = "restarts=" + std::to_string(trace.restarts);
  out.push_back(std::move(epochs));
  return out;
}

/// Lower-bound tightness: V' <= R_T(u*) on the generated sequence.
inline BoundCertificate certify_lower_bound(const Trace& trace, std::span<const Loss> losses, const Vector& u_star,
                                            double v_target) {
  return make_certificate("lower_bound_tightness", v_target, regret(trace, losses, u_star), 1e-9);
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_METRICS_HPP
