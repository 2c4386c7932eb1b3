#ifndef IMPLICIT_ONLINE_TESTING_CHECK_SUITE_HPP
#define IMPLICIT_ONLINE_TESTING_CHECK_SUITE_HPP

#include "implicit_online/data.hpp"
#include "implicit_online/experiment.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/learners.hpp"
#include "implicit_online/losses.hpp"
#include "implicit_online/metrics.hpp"
#include "implicit_online/prox.hpp"
#include "implicit_online/testing/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace implicit_online::testing {

struct CheckOptions {
  bool quick = false;
  std::uint64_t seed = 20240601;
  /// Test-only: negate delta before the step-property checks.
  bool inject_delta_sign_fault = false;
};

struct CheckResult {
  explicit CheckResult(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  bool passed = true;
  /// Smallest margin seen (tolerance-adjusted); negative means a violation.
  double worst_slack = kInfinity;
  std::size_t trials = 0;
  std::string detail;

  void record(double slack, const std::string& what) {
    ++trials;
    if (slack < worst_slack) {
      worst_slack = slack;
      if (slack < 0.0 && passed) {
        passed = false;
        detail = what;
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Random instances.

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double log_uniform(double lo_exp, double hi_exp) { return std::pow(10.0, uniform(lo_exp, hi_exp)); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Vector gaussian(Eigen::Index d, double sd = 1.0) {
    std::normal_distribution<double> n(0.0, sd);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng_);
    return v;
  }

  Vector nonzero_gaussian(Eigen::Index d) {
    Vector v = gaussian(d);
    while (v.norm() < 1e-3) v = gaussian(d);
    return v;
  }

  /// Uniform in the ball of the setup, or Gaussian with the given scale.
  Vector point_in(const MirrorSetup& setup, Eigen::Index d, double scale = 1.0) {
    if (!setup.bounded()) return gaussian(d, scale);
    Vector dir = nonzero_gaussian(d).normalized();
    return dir * (setup.radius() * std::pow(uniform(0.0, 1.0), 1.0 / static_cast<double>(d)));
  }

  /// Family index 0..4: hinge, absolute, square, quad1d, linear.
  Loss loss(int family, Eigen::Index d, double z_scale = 1.0) {
    switch (family) {
      case 0:
        return Loss::hinge(z_scale * nonzero_gaussian(d), coin() ? 1.0 : -1.0);
      case 1:
        return Loss::absolute(z_scale * nonzero_gaussian(d), uniform(-3.0, 3.0));
      case 2:
        return Loss::square(z_scale * nonzero_gaussian(d), uniform(-3.0, 3.0));
      case 3:
        return Loss::quad1d(uniform(-200.0, 200.0));
      default:
        return Loss::linear(nonzero_gaussian(d).normalized(), uniform(0.0, 3.0) * z_scale);
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct ProxInstance {
  Loss loss;
  Vector x_t;
  double eta;
  MirrorSetup setup;
};

/// `per_family` instances for each of the five families, alternating
/// between unconstrained and ball domains.
inline std::vector<ProxInstance> prox_instances(std::size_t per_family, std::uint64_t seed) {
  Sampler s(seed);
  std::vector<ProxInstance> out;
  out.reserve(5 * per_family);
  for (int fam = 0; fam < 5; ++fam) {
    for (std::size_t i = 0; i < per_family; ++i) {
      const Eigen::Index d = fam == 3 ? 1 : s.integer(1, 3);
      const MirrorSetup setup = (i % 2 == 0) ? MirrorSetup::unconstrained() : MirrorSetup::ball(s.log_uniform(-1, 1));
      Loss loss = s.loss(fam, d, s.log_uniform(-0.5, 0.5));
      Vector x = fam == 3 && !setup.bounded() ? Vector::Constant(1, s.uniform(-300.0, 300.0))
                                              : s.point_in(setup, d, s.log_uniform(-1, 1));
      out.push_back({std::move(loss), std::move(x), s.log_uniform(-3, 3), setup});
    }
  }
  return out;
}

namespace detail {

inline std::string describe(const ProxInstance& p) {
  std::ostringstream os;
  os << p.loss.family() << " d=" << p.x_t.size() << " eta=" << p.eta
     << (p.setup.bounded() ? " ball r=" + std::to_string(p.setup.radius()) : std::string(" unconstrained"));
  return os.str();
}

/// A random L-Lipschitz-on-the-ball sequence; `kind` picks the flavour.
inline std::vector<Loss> random_sequence(Sampler& s, int kind, std::size_t T) {
  std::vector<Loss> out;
  out.reserve(T);
  switch (kind % 4) {
    case 0:  // mixed one-dimensional families
      for (std::size_t t = 0; t < T; ++t) {
        const int fam = s.integer(0, 3);
        Vector z = Vector::Constant(1, s.uniform(0.2, 2.0) * (s.coin() ? 1.0 : -1.0));
        switch (fam) {
          case 0:
            out.push_back(Loss::hinge(z, s.coin() ? 1.0 : -1.0));
            break;
          case 1:
            out.push_back(Loss::absolute(z, s.uniform(-2.0, 2.0)));
            break;
          case 2:
            out.push_back(Loss::square(z, s.uniform(-2.0, 2.0)));
            break;
          default:
            out.push_back(Loss::quad1d(s.uniform(-2.0, 2.0)));
        }
      }
      break;
    case 1: {  // slowly drifting quadratic target
      const double amp = s.uniform(0.5, 3.0), freq = s.uniform(0.5, 4.0);
      for (std::size_t t = 1; t <= T; ++t) {
        out.push_back(Loss::quad1d(amp * std::sin(freq * static_cast<double>(t) / static_cast<double>(T))));
      }
      break;
    }
    case 2: {  // linear losses in three dimensions
      for (std::size_t t = 0; t < T; ++t) out.push_back(Loss::linear(s.nonzero_gaussian(3).normalized(), s.uniform(0, 1)));
      break;
    }
    default: {  // square losses with a fixed feature and drifting target
      Vector z = Vector::Constant(1, s.uniform(0.5, 1.5));
      double y = s.uniform(-1.0, 1.0);
      for (std::size_t t = 0; t < T; ++t) {
        y += s.uniform(-0.05, 0.05);
        out.push_back(Loss::square(z, y));
      }
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Criteria.

/// Closed-form prox against the numeric oracle, sup-norm 1e-6.
inline CheckResult check_prox_vs_oracle(const CheckOptions& opt) {
  CheckResult res{"prox_vs_oracle"};
  for (const ProxInstance& p : prox_instances(opt.quick ? 100 : 1000, opt.seed)) {
    const Vector fast = implicit_step(p.loss, p.x_t, p.eta, p.setup).x_next;
    const Vector slow = prox_oracle(p.loss, p.x_t, p.eta, p.setup);
    res.record(1e-6 - (fast - slow).lpNorm<Eigen::Infinity>(), detail::describe(p));
  }
  return res;
}

/// Loss decrease, delta >= 0, first-order optimality, monotone subgradients
/// and Euclidean shrinkage of g'.
inline CheckResult check_step_properties(const CheckOptions& opt) {
  CheckResult res{"step_properties"};
  Sampler s(opt.seed + 1);
  for (const ProxInstance& p : prox_instances(opt.quick ? 100 : 1000, opt.seed)) {
    const ProxResult r = implicit_step(p.loss, p.x_t, p.eta, p.setup);
    const std::string what = detail::describe(p);
    const double l0 = eval(p.loss, p.x_t), l1 = eval(p.loss, r.x_next);
    const Vector g = subgradient(p.loss, p.x_t);
    double delta = l0 - l1 - bregman(p.setup, r.x_next, p.x_t) / p.eta;
    if (opt.inject_delta_sign_fault) delta = -delta;

    res.record(l0 + 1e-9 - l1, "loss increased: " + what);
    res.record(delta + 1e-9, "negative delta: " + what);
    const Vector kkt = p.eta * r.g_prime + r.x_next - p.x_t;
    const double spread = 1.0 + p.x_t.norm() + r.x_next.norm();
    for (int k = 0; k < 100; ++k) {
      const Vector u = p.setup.bounded() ? s.point_in(p.setup, p.x_t.size()) : s.gaussian(p.x_t.size(), spread);
      res.record(kkt.dot(u - r.x_next) + 1e-8, "optimality residual: " + what);
    }
    res.record((r.g_prime - g).dot(r.x_next - p.x_t) + 1e-9, "monotonicity: " + what);
    res.record(g.norm() + 1e-9 - r.g_prime.norm(), "shrinkage: " + what);
  }
  return res;
}

/// delta <= eta ||g|| min(2 ||g'||, ||g|| / 2).
inline CheckResult check_per_step_bound(const CheckOptions& opt) {
  CheckResult res{"per_step_bound"};
  for (const ProxInstance& p : prox_instances(opt.quick ? 100 : 1000, opt.seed)) {
    const ProxResult r = implicit_step(p.loss, p.x_t, p.eta, p.setup);
    const double delta =
        eval(p.loss, p.x_t) - eval(p.loss, r.x_next) - bregman(p.setup, r.x_next, p.x_t) / p.eta;
    const double g = subgradient(p.loss, p.x_t).norm();
    const double bound = p.eta * g * std::min(2.0 * r.g_prime.norm(), 0.5 * g);
    res.record(bound + 1e-9 - delta, detail::describe(p));
  }
  return res;
}

namespace detail {

inline void record_certificate(CheckResult& res, const BoundCertificate& c, const std::string& where) {
  if (!c.in_scope) {
    res.record(-1.0, c.name + " unexpectedly " + c.note + " (" + where + ")");
    return;
  }
  const double tol = c.name == "doubling_epochs" || c.name == "lower_bound_tightness" ? 1e-9 : kCertificateTolerance;
  res.record(c.slack + tol, c.name + " violated (" + where + "): lhs=" + format_double(c.lhs) +
                                " rhs=" + format_double(c.rhs));
}

/// lambda non-decreasing and delta_t <= min(sqrt(2) D ||g||, ||g||^2 / (2 lambda_t)).
inline void record_adaimplicit_steps(CheckResult& res, const Trace& tr, const std::string& where) {
  const double D = theoretical_beta(tr.config.setup);
  double prev = 0.0;
  for (const StepRecord& r : tr.records) {
    res.record(r.lambda - prev, "lambda decreased (" + where + ")");
    prev = r.lambda;
    if (r.lambda > 0.0) {
      const double bound = std::min(std::sqrt(2.0) * D * r.g_norm, r.g_norm * r.g_norm / (2.0 * r.lambda));
      res.record(bound + 1e-8 - r.delta_t, "per-step delta bound (" + where + ")");
    }
  }
  res.record(tr.lambda_final - prev, "lambda decreased (" + where + ")");
}

}  // namespace detail

/// AdaImplicit with beta = sqrt(Bregman diameter): regret and lambda
/// certificates on the drifting sine sequence and on random sequences.
inline CheckResult check_adaimplicit_certificate(const CheckOptions& opt) {
  CheckResult res{"adaimplicit_certificate"};
  auto one = [&](const std::vector<Loss>& losses, const MirrorSetup& setup, const std::string& where) {
    LearnerConfig cfg;
    cfg.algorithm = Algorithm::AdaImplicit;
    cfg.beta = theoretical_beta(setup);
    cfg.x_init = Vector::Zero(losses.front().dimension());
    cfg.setup = setup;
    const Trace tr = run(cfg, losses);
    const Vector u = best_fixed_comparator(losses, setup);
    detail::record_certificate(res, certify_adaimplicit(tr, losses, setup, u), where);
    detail::record_certificate(res, certify_adaimplicit_lambda(tr, losses, setup), where);
    detail::record_adaimplicit_steps(res, tr, where);
  };
  one(gen_sine(2000), MirrorSetup::ball(75.0), "sine T=2000 r=75");
  Sampler s(opt.seed + 4);
  const int n = opt.quick ? 6 : 20;
  for (int k = 0; k < n; ++k) {
    const std::vector<Loss> losses = detail::random_sequence(s, k, opt.quick ? 100 : 300);
    one(losses, MirrorSetup::ball(1.0), "random sequence " + std::to_string(k));
  }
  return res;
}

/// Constant rate: R_T(u) <= B(u, x_1)/eta + l_1(x_1) - l_T(x_{T+1}) + V_T.
inline CheckResult check_constant_rate(const CheckOptions& opt) {
  CheckResult res{"constant_rate_bound"};
  Sampler s(opt.seed + 5);
  const int n = opt.quick ? 6 : 20;
  for (int k = 0; k < n; ++k) {
    const MirrorSetup setup = MirrorSetup::ball(s.uniform(0.5, 3.0));
    const std::vector<Loss> losses = detail::random_sequence(s, k, opt.quick ? 100 : 300);
    LearnerConfig cfg;
    cfg.algorithm = Algorithm::ImplicitConst;
    cfg.eta_const = s.log_uniform(-2, 1);
    cfg.x_init = s.point_in(setup, losses.front().dimension());
    cfg.setup = setup;
    const Trace tr = run(cfg, losses);
    std::vector<Vector> us{best_fixed_comparator(losses, setup), cfg.x_init};
    for (int j = 0; j < 5; ++j) us.push_back(s.point_in(setup, cfg.x_init.size()));
    for (const Vector& u : us) {
      detail::record_certificate(res, certify_constant_rate(tr, losses, setup, u), "sequence " + std::to_string(k));
    }
  }
  return res;
}

/// Recurrence bound over random (a, b, c).
inline CheckResult check_recurrence(const CheckOptions& opt) {
  CheckResult res{"recurrence_bound"};
  Sampler s(opt.seed + 6);
  const int n = opt.quick ? 1000 : 10000;
  for (int k = 0; k < n; ++k) {
    std::vector<double> a(static_cast<std::size_t>(s.integer(0, 50)));
    for (double& v : a) v = s.uniform(0.0, 10.0);
    const double b = 5.0 * (1.0 - s.uniform(0.0, 1.0));  // (0, 5]
    const double c = 5.0 * (1.0 - s.uniform(0.0, 1.0));
    const RecurrenceCheck r = adahedge_recurrence_check(a, b, c);
    res.record(r.bound * (1.0 + 1e-12) - r.delta_final, "triple " + std::to_string(k));
  }
  return res;
}

/// Doubling trick: fixed losses stay in one epoch and satisfy the fixed-loss
/// bound; Lipschitz sequences satisfy the general and epoch-count bounds.
///
/// The fixed-loss instances are drawn with l(x_1) - min_V l < beta L: the
/// epoch-0 budget is beta L and the summed delta never exceeds that gap.
/// Outside that regime restarts do occur (see the doubling unit tests).
inline CheckResult check_doubling(const CheckOptions& opt) {
  CheckResult res{"doubling_trick"};
  Sampler s(opt.seed + 7);
  auto run_fixed = [&](const Loss& loss, const Vector& x1, const MirrorSetup& setup, double L,
                       const std::string& where) {
    LearnerConfig cfg;
    cfg.algorithm = Algorithm::DoublingImplicit;
    cfg.beta = 1.0;
    cfg.lipschitz = L;
    cfg.x_init = x1;
    cfg.setup = setup;
    const std::vector<Loss> losses = gen_fixed(loss, 200);
    const Trace tr = run(cfg, losses);
    res.record(tr.restarts == 0 ? 1.0 : -1.0, "fixed loss restarted (" + where + ")");
    std::vector<Vector> us{minimum_displacement_minimizer(loss, x1, setup), x1};
    for (int j = 0; j < 3; ++j) us.push_back(s.point_in(setup, x1.size(), 2.0));
    for (const Vector& u : us) {
      for (const BoundCertificate& c : certify_doubling(tr, losses, setup, u)) {
        detail::record_certificate(res, c, where);
      }
    }
  };

  // canonical instance
  {
    const MirrorSetup ball = MirrorSetup::ball(1.0);
    const Loss sq = Loss::square(Vector::Constant(1, 1.0), 1.0);
    run_fixed(sq, Vector::Zero(1), ball, lipschitz_bound(sq, ball), "square z=1 y=1, r=1, L=2");
  }
  const int n_fixed = opt.quick ? 10 : 40;
  int accepted = 0;
  for (int attempt = 0; accepted < n_fixed && attempt < 100 * n_fixed; ++attempt) {
    const bool bounded = s.coin();
    const MirrorSetup setup = bounded ? MirrorSetup::ball(s.uniform(0.5, 3.0)) : MirrorSetup::unconstrained();
    const int fam = bounded ? s.integer(0, 4) : (s.coin() ? 0 : 1);
    const Eigen::Index d = fam == 3 ? 1 : s.integer(1, 3);
    if (fam == 4 && !bounded) continue;
    const Loss loss = s.loss(fam, d);
    const Vector x1 = s.point_in(setup, d, 1.0);
    const double L = lipschitz_bound(loss, setup);
    if (!(L > 0.0)) continue;
    const double gap = eval(loss, x1) - eval(loss, minimum_displacement_minimizer(loss, x1, setup));
    if (!(gap < L)) continue;  // beta = 1
    ++accepted;
    run_fixed(loss, x1, setup, L, std::string(loss.family()) + " fixed #" + std::to_string(accepted));
  }
  res.record(accepted == n_fixed ? 1.0 : -1.0, "too few fixed-loss instances in the provable regime");

  // Lipschitz sequences
  const int n_seq = opt.quick ? 6 : 20;
  for (int k = 0; k < n_seq; ++k) {
    const bool bounded = k % 2 == 0;
    const MirrorSetup setup = bounded ? MirrorSetup::ball(s.uniform(0.5, 3.0)) : MirrorSetup::unconstrained();
    const Eigen::Index d = s.integer(1, 3);
    const std::size_t T = static_cast<std::size_t>(s.integer(64, 256));
    std::vector<Loss> losses;
    for (std::size_t t = 0; t < T; ++t) losses.push_back(s.loss(s.integer(0, 2) == 2 ? 4 : s.integer(0, 1), d));
    double L = 0.0;
    for (const Loss& l : losses) L = std::max(L, lipschitz_bound(l, setup));
    LearnerConfig cfg;
    cfg.algorithm = Algorithm::DoublingImplicit;
    cfg.beta = s.log_uniform(-1, 1);
    cfg.lipschitz = L;
    cfg.x_init = s.point_in(setup, d, 1.0);
    cfg.setup = setup;
    const Trace tr = run(cfg, losses);
    std::vector<Vector> us{cfg.x_init};
    if (bounded) us.push_back(best_fixed_comparator(losses, setup, ComparatorOptions{20000, 4}));
    for (int j = 0; j < 4; ++j) us.push_back(s.point_in(setup, d, 3.0));
    for (const Vector& u : us) {
      for (const BoundCertificate& c : certify_doubling(tr, losses, setup, u)) {
        detail::record_certificate(res, c, "lipschitz sequence " + std::to_string(k));
      }
    }
  }
  return res;
}

/// Every learner has regret >= V' on the lower-bound sequence, whose
/// temporal variability is V'.
inline CheckResult check_lower_bound(const CheckOptions& /*opt*/) {
  CheckResult res{"lower_bound_tightness"};
  const MirrorSetup ball = MirrorSetup::ball(1.0);
  std::vector<Vector> starts{Vector::Zero(2), (Vector(2) << 0.3, 0.4).finished()};
  for (double v : {0.0, 1.0, 10.0, 1000.0}) {
    for (const Vector& x1 : starts) {
      const std::vector<Loss> losses = gen_lower_bound(v, ball, x1, 20);
      const std::string where = "V'=" + format_double(v);
      res.record(1e-9 - std::abs(temporal_variability(losses, ball) - v), "V_T mismatch " + where);
      const Vector u = best_fixed_comparator(losses, ball);
      for (Algorithm a : kAllAlgorithms) {
        LearnerConfig cfg;
        cfg.algorithm = a;
        cfg.lipschitz = std::max(v, 1.0);
        cfg.x_init = x1;
        cfg.setup = ball;
        if (a == Algorithm::AdaImplicit) cfg.beta = theoretical_beta(ball);
        const Trace tr = run(cfg, losses);
        detail::record_certificate(res, certify_lower_bound(tr, losses, u, v), where + " " + to_string(a));
      }
    }
  }
  return res;
}

/// Drifting sine target, beta = 1, T = 2000, r = 75: AdaImplicit ends below
/// OGD and the 1/sqrt(t) implicit schedule.
inline CheckResult check_synthetic_ordering(const CheckOptions& /*opt*/) {
  CheckResult res{"synthetic_ordering"};
  const SyntheticResult r = run_synthetic(ExperimentConfig::synthetic_defaults());
  auto final_of = [&](Algorithm a) {
    for (const SyntheticSeries& s : r.series) {
      if (s.algorithm == a) return s.cumulative.back();
    }
    throw Error("missing series");
  };
  const double ada = final_of(Algorithm::AdaImplicit);
  res.record(final_of(Algorithm::OGD) - ada, "AdaImplicit not below OGD");
  res.record(final_of(Algorithm::ImplicitDecay) - ada, "AdaImplicit not below ImplicitDecay");
  res.detail = "AdaImplicit=" + format_double(ada) + " OGD=" + format_double(final_of(Algorithm::OGD)) +
               " ImplicitDecay=" + format_double(final_of(Algorithm::ImplicitDecay)) + (res.passed ? "" : " " + res.detail);
  return res;
}

using CheckFn = CheckResult (*)(const CheckOptions&);

struct NamedCheck {
  const char* name;
  CheckFn fn;
};

/// Acceptance criteria 1 through 9, in order.
inline const std::vector<NamedCheck>& all_checks() {
  static const std::vector<NamedCheck> checks{
      {"prox_vs_oracle", &check_prox_vs_oracle},
      {"step_properties", &check_step_properties},
      {"per_step_bound", &check_per_step_bound},
      {"adaimplicit_certificate", &check_adaimplicit_certificate},
      {"constant_rate_bound", &check_constant_rate},
      {"recurrence_bound", &check_recurrence},
      {"doubling_trick", &check_doubling},
      {"lower_bound_tightness", &check_lower_bound},
      {"synthetic_ordering", &check_synthetic_ordering}};
  return checks;
}

inline CheckResult run_check(const NamedCheck& c, const CheckOptions& opt) {
  try {
    return c.fn(opt);
  } catch (const std::exception& e) {
    CheckResult r{c.name};
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
    return r;
  }
}

inline std::vector<CheckResult> run_check_suite(const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const NamedCheck& c : all_checks()) out.push_back(run_check(c, opt));
  return out;
}

}  // namespace implicit_online::testing

#endif  // IMPLICIT_ONLINE_TESTING_CHECK_SUITE_HPP
