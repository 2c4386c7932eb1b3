#ifndef IMPLICIT_ONLINE_LEARNERS_HPP
#define IMPLICIT_ONLINE_LEARNERS_HPP

#include "implicit_online/core.hpp"
#include "implicit_online/geometry.hpp"
#include "implicit_online/losses.hpp"
#include "implicit_online/prox.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace implicit_online {

enum class Algorithm { OGD, AdaOGD, ImplicitDecay, ImplicitConst, AdaImplicit, DoublingImplicit };

inline constexpr std::array<Algorithm, 6> kAllAlgorithms = {
    Algorithm::OGD,         Algorithm::AdaOGD,      Algorithm::ImplicitDecay,
    Algorithm::ImplicitConst, Algorithm::AdaImplicit, Algorithm::DoublingImplicit};

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::OGD:
      return "OGD";
    case Algorithm::AdaOGD:
      return "AdaOGD";
    case Algorithm::ImplicitDecay:
      return "ImplicitDecay";
    case Algorithm::ImplicitConst:
      return "ImplicitConst";
    case Algorithm::AdaImplicit:
      return "AdaImplicit";
    case Algorithm::DoublingImplicit:
      return "DoublingImplicit";
  }
  return "?";
}

/// Case-insensitive match against to_string names.
inline Algorithm parse_algorithm(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
  };
  const std::string key = lower(name);
  for (Algorithm a : kAllAlgorithms) {
    if (lower(to_string(a)) == key) return a;
  }
  throw Error("unknown algorithm: " + std::string(name));
}

inline bool is_implicit(Algorithm a) { return a != Algorithm::OGD && a != Algorithm::AdaOGD; }

struct LearnerConfig {
  Algorithm algorithm = Algorithm::AdaImplicit;
  double beta = 1.0;
  /// ImplicitConst only.
  double eta_const = 1.0;
  /// DoublingImplicit only.
  double lipschitz = kInfinity;
  Vector x_init;
  MirrorSetup setup = MirrorSetup::unconstrained();

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("config: beta must be positive and finite");
    if (x_init.size() == 0) throw Error("config: x_init is empty");
    if (!x_init.allFinite()) throw Error("config: x_init must be finite");
    if (!setup.contains(x_init)) throw Error("config: x_init lies outside the domain");
    if (algorithm == Algorithm::ImplicitConst && !(eta_const > 0.0 && std::isfinite(eta_const))) {
      throw Error("config: eta_const must be positive and finite");
    }
    if (algorithm == Algorithm::DoublingImplicit && !(lipschitz > 0.0 && std::isfinite(lipschitz))) {
      throw Error("config: DoublingImplicit requires a finite positive Lipschitz constant");
    }
  }
};

struct LearnerState {
  Vector x;
  std::size_t t = 1;
  double lambda = 0.0;
  double grad_sq_sum = 0.0;
  int epoch = 0;
  double epoch_sum = 0.0;
  double eta_epoch = 0.0;
  int restarts = 0;
};

struct StepRecord {
  std::size_t t = 0;
  Vector x_t;
  /// loss_t(x_t)
  double loss_value = 0.0;
  /// loss_t evaluated at the updated point (before any restart).
  double loss_next = 0.0;
  /// Step size; +inf for the lambda = 0 step of AdaImplicit and for skipped
  /// AdaOGD steps.
  double rate = 0.0;
  /// AdaImplicit lambda_t; 0 elsewhere.
  double lambda = 0.0;
  /// loss_t(x_t) - loss_t(x') - B(x', x_t) / rate, with x' the updated point.
  double delta_t = 0.0;
  double g_norm = 0.0;
  /// NaN for the explicit baselines.
  double g_prime_norm = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.0;
  int epoch = 0;
  bool restarted = false;
};

class Learner {
 public:
  explicit Learner(LearnerConfig config) : config_(std::move(config)) {
    config_.validate();
    state_.x = config_.x_init;
    if (config_.algorithm == Algorithm::DoublingImplicit) {
      state_.eta_epoch = config_.beta / config_.lipschitz;
    }
  }

  const Vector& predict() const { return state_.x; }
  const LearnerState& state() const { return state_; }
  const LearnerConfig& config() const { return config_; }

  StepRecord observe(const Loss& loss) {
    detail::require_dim(state_.x, loss.dimension(), "observe");
    const MirrorSetup& setup = config_.setup;
    const Vector& x = state_.x;
    const double t = static_cast<double>(state_.t);

    StepRecord rec;
    rec.t = state_.t;
    rec.x_t = x;
    rec.loss_value = eval(loss, x);
    const Vector g = subgradient(loss, x);
    rec.g_norm = g.norm();
    rec.epoch = state_.epoch;

    Vector x_next;
    switch (config_.algorithm) {
      case Algorithm::OGD: {
        rec.rate = config_.beta / std::sqrt(t);
        x_next = project(setup, Vector(x - rec.rate * g));
        break;
      }
      case Algorithm::AdaOGD: {
        state_.grad_sq_sum += rec.g_norm * rec.g_norm;
        if (state_.grad_sq_sum > 0.0) {
          rec.rate = config_.beta / std::sqrt(state_.grad_sq_sum);
          x_next = project(setup, Vector(x - rec.rate * g));
        } else {
          rec.rate = kInfinity;
          x_next = x;
        }
        break;
      }
      case Algorithm::ImplicitDecay:
      case Algorithm::ImplicitConst:
      case Algorithm::DoublingImplicit: {
        rec.rate = config_.algorithm == Algorithm::ImplicitDecay  ? config_.beta / std::sqrt(t)
                   : config_.algorithm == Algorithm::ImplicitConst ? config_.eta_const
                                                                   : state_.eta_epoch;
        ProxResult p = implicit_step(loss, x, rec.rate, setup);
        rec.g_prime_norm = p.g_prime.norm();
        rec.alpha = p.alpha;
        x_next = std::move(p.x_next);
        break;
      }
      case Algorithm::AdaImplicit: {
        rec.lambda = state_.lambda;
        rec.rate = state_.lambda > 0.0 ? 1.0 / state_.lambda : kInfinity;
        ProxResult p = implicit_step(loss, x, rec.rate, setup);
        rec.g_prime_norm = p.g_prime.norm();
        rec.alpha = p.alpha;
        x_next = std::move(p.x_next);
        break;
      }
    }

    rec.loss_next = eval(loss, x_next);
    const double b = bregman(setup, x_next, x);
    // lambda * B, which is 0 for an infinite rate
    const double prox_term = std::isinf(rec.rate) ? 0.0 : b / rec.rate;
    rec.delta_t = rec.loss_value - rec.loss_next - prox_term;

    if (config_.algorithm == Algorithm::AdaImplicit) {
      // delta is nonnegative in exact arithmetic; the clamp keeps rounding
      // from ever decreasing lambda
      state_.lambda += std::max(rec.delta_t, 0.0) / (config_.beta * config_.beta);
    } else if (config_.algorithm == Algorithm::DoublingImplicit) {
      state_.epoch_sum += rec.delta_t;
      const double threshold = state_.eta_epoch * config_.lipschitz * config_.lipschitz *
                               std::ldexp(1.0, state_.epoch);
      if (state_.epoch_sum >= threshold) {
        ++state_.epoch;
        ++state_.restarts;
        state_.eta_epoch = config_.beta / (config_.lipschitz * std::sqrt(std::ldexp(1.0, state_.epoch)));
        state_.epoch_sum = 0.0;
        x_next = config_.x_init;
        rec.restarted = true;
      }
    }

    state_.x = std::move(x_next);
    ++state_.t;
    return rec;
  }

 private:
  LearnerConfig config_;
  LearnerState state_;
};

struct Trace {
  std::vector<StepRecord> records;
  Vector x_final;
  LearnerConfig config;
  double lambda_final = 0.0;
  int restarts = 0;
};

inline Trace run(const LearnerConfig& config, std::span<const Loss> losses) {
  if (losses.empty()) throw Error("empty sequence");
  Learner learner(config);
  Trace trace;
  trace.config = config;
  trace.records.reserve(losses.size());
  for (const Loss& loss : losses) trace.records.push_back(learner.observe(loss));
  trace.x_final = learner.predict();
  trace.lambda_final = learner.state().lambda;
  trace.restarts = learner.state().restarts;
  return trace;
}

}  // namespace implicit_online

#endif  // IMPLICIT_ONLINE_LEARNERS_HPP
