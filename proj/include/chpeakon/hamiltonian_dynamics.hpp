#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chpeakon/errors.hpp"
#include "chpeakon/ode.hpp"
#include "chpeakon/peakon_field.hpp"

namespace chpeakon {

struct IntegratorSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.05;
  double handoff_gap = 1e-3;
  double strength_blowup = 1e6;

  void validate() const {
    if (!(rel_tol > 0.0 && abs_tol > 0.0 && max_step > 0.0 && handoff_gap > 0.0 && strength_blowup > 0.0)) {
      throw ConfigError("integrator settings must all be positive");
    }
    if (rel_tol > 1e-3 || abs_tol > 1e-3) throw ConfigError("integrator tolerances must not exceed 1e-3");
  }

  ode::Tolerances tolerances() const { return {rel_tol, abs_tol}; }
};

/// A binary interaction detected just before the two crests merge.
struct CollisionEvent {
  double tau = 0.0;                       ///< handoff time
  std::size_t first = 0;                  ///< index i of the pair (i, i+1)
  std::pair<Peakon, Peakon> pair;         ///< the two colliding peakons at handoff
  double q_bar = 0.0;                     ///< collision position estimate
  double e_tau = 0.0;                     ///< (p_{i+1} - p_i)^2 (q_{i+1} - q_i) at handoff
  std::vector<Peakon> spectators;         ///< every other peakon, ascending

  void validate() const {
    if (!(e_tau > 0.0) || !std::isfinite(e_tau)) {
      throw BadCollisionData("collision event needs a positive concentrated energy, got " + std::to_string(e_tau));
    }
  }
};

struct TrajectorySample {
  double t = 0.0;
  MultipeakonState state;
  std::optional<FieldDiagnostics> diagnostics;
};

/// Which states `simulate` records.
struct SamplingOptions {
  double sample_dt = 0.0;              ///< 0 records every accepted step
  double origin = 0.0;                 ///< sample grid is origin + k * sample_dt
  bool include_initial = true;
  std::optional<double> alpha;         ///< compute FieldDiagnostics with this decay when set
  unsigned threads = 1;
};

struct SimulationResult {
  std::vector<TrajectorySample> samples;
  std::optional<CollisionEvent> collision;
  MultipeakonState final_state;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

namespace dynamics_detail {

inline ode::Vector pack(const MultipeakonState& state) {
  const std::size_t n = state.size();
  ode::Vector y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = state.peakons[i].q;
    y[n + i] = state.peakons[i].p;
  }
  return y;
}

inline MultipeakonState unpack(const ode::Vector& y, double t) {
  const std::size_t n = y.size() / 2;
  MultipeakonState state;
  state.t = t;
  state.peakons.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.peakons[i] = {y[i], y[n + i]};
  return state;
}

/// Right-hand side of the peakon ODE on the packed vector [q..., p...].
inline ode::Vector hsys(const ode::Vector& y) {
  const std::size_t n = y.size() / 2;
  ode::Vector dy(2 * n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(y[i + 1] > y[i])) throw DegenerateState("coincident or crossed crests in the peakon ODE");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double dq = 0.0;
    double dp = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::exp(-std::abs(y[i] - y[j]));
      dq += y[n + j] * e;
      dp += y[n + j] * sign0(y[i] - y[j]) * e;
    }
    dy[i] = dq;
    dy[n + i] = y[n + i] * dp;
  }
  return dy;
}

inline bool strictly_ordered(const ode::Vector& y) {
  const std::size_t n = y.size() / 2;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(y[i + 1] > y[i])) return false;
  }
  return true;
}

/// Per-pair bookkeeping for the collision trigger.
class CollisionMonitor {
 public:
  CollisionMonitor(std::size_t n, const IntegratorSettings& settings)
      : settings_(settings), reference_(n > 0 ? n - 1 : 0, std::numeric_limits<double>::quiet_NaN()) {}

  /// Index of the pair whose trigger fired, if any. Throws SimultaneousCollision
  /// when more than one pair fires on the same state.
  std::optional<std::size_t> check(const ode::Vector& y) {
    const std::size_t n = y.size() / 2;
    std::optional<std::size_t> fired;
    auto fire = [&](std::size_t k) {
      if (fired && *fired != k) {
        throw SimultaneousCollision("pairs " + std::to_string(*fired) + " and " + std::to_string(k) +
                                    " trigger a collision on the same step");
      }
      fired = k;
    };
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double gap = y[k + 1] - y[k];
      const double dp = std::abs(y[n + k + 1] - y[n + k]);
      if (gap < 10.0 * settings_.handoff_gap) {
        if (std::isnan(reference_[k])) reference_[k] = dp;
      } else {
        reference_[k] = std::numeric_limits<double>::quiet_NaN();
      }
      if (gap < settings_.handoff_gap && dp > reference_[k]) fire(k);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(y[n + i]) > settings_.strength_blowup) {
        std::size_t k = i;
        if (i == 0) k = 0;
        else if (i + 1 == n) k = i - 1;
        else k = (y[i] - y[i - 1] < y[i + 1] - y[i]) ? i - 1 : i;
        fire(k);
      }
    }
    return fired;
  }

 private:
  IntegratorSettings settings_;
  std::vector<double> reference_;
};

inline CollisionEvent make_event(const MultipeakonState& s, std::size_t k) {
  CollisionEvent ev;
  ev.tau = s.t;
  ev.first = k;
  ev.pair = {s.peakons[k], s.peakons[k + 1]};
  ev.q_bar = 0.5 * (ev.pair.first.q + ev.pair.second.q);
  ev.e_tau = std::pow(ev.pair.second.p - ev.pair.first.p, 2) * (ev.pair.second.q - ev.pair.first.q);
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j != k && j != k + 1) ev.spectators.push_back(s.peakons[j]);
  }
  return ev;
}

}  // namespace dynamics_detail

/// (dq, dp) of the peakon Hamiltonian system.
inline std::pair<std::vector<double>, std::vector<double>> rhs_hsys(const MultipeakonState& state) {
  state.validate();
  const auto dy = dynamics_detail::hsys(dynamics_detail::pack(state));
  const std::size_t n = state.size();
  return {std::vector<double>(dy.begin(), dy.begin() + static_cast<std::ptrdiff_t>(n)),
          std::vector<double>(dy.begin() + static_cast<std::ptrdiff_t>(n), dy.end())};
}

struct StepOutcome {
  MultipeakonState state;
  double error_estimate;  ///< scaled RMS error of the accepted step
  double h_used;
  double h_next;
};

/// One accepted adaptive step starting from a trial size h (0 picks one).
inline StepOutcome step(const MultipeakonState& state, const IntegratorSettings& settings, double h = 0.0) {
  state.validate();
  auto rhs = [](double, const ode::Vector& y) { return dynamics_detail::hsys(y); };
  ode::Controller ctl;
  ctl.h = h;
  const auto y = dynamics_detail::pack(state);
  const auto acc = ode::adaptive_step(rhs, state.t, y, std::numeric_limits<double>::infinity(), settings.max_step,
                                      settings.tolerances(), ctl, dynamics_detail::strictly_ordered);
  return {dynamics_detail::unpack(acc.y, acc.t), acc.error_norm, acc.h_used, ctl.h};
}

/// Time reversal u(t, x) -> -u(-t, x): negates every strength and the time.
inline MultipeakonState reverse(const MultipeakonState& state) {
  MultipeakonState out = state;
  for (auto& pk : out.peakons) pk.p = -pk.p;
  out.t = -state.t;
  return out;
}

/// Integrates the peakon system from state.t to t_end, stopping early when a
/// binary collision is imminent.
inline SimulationResult simulate(const MultipeakonState& initial, double t_end, const IntegratorSettings& settings,
                                 const SamplingOptions& sampling = {}) {
  initial.validate();
  settings.validate();
  if (!(t_end > initial.t)) throw DomainError("simulate needs t_end > state.t");
  for (std::size_t i = 0; i + 1 < initial.size(); ++i) {
    if (!(initial.peakons[i + 1].q > initial.peakons[i].q)) {
      throw DegenerateState("simulate needs distinct crests; coincident crests are a collision");
    }
  }

  SimulationResult result;
  auto record = [&](const MultipeakonState& s) {
    TrajectorySample sample{s.t, s, std::nullopt};
    if (sampling.alpha) sample.diagnostics = weighted_diagnostics(s, DecayParameters(*sampling.alpha), sampling.threads);
    result.samples.push_back(std::move(sample));
  };

  auto rhs = [](double, const ode::Vector& y) { return dynamics_detail::hsys(y); };
  dynamics_detail::CollisionMonitor monitor(initial.size(), settings);
  ode::Controller ctl;
  ode::Vector y = dynamics_detail::pack(initial);
  double t = initial.t;
  const double snap = 1e-13 * std::max(1.0, std::abs(t_end));

  auto next_sample_after = [&](double now) {
    if (!(sampling.sample_dt > 0.0)) return t_end;
    const double k = std::floor((now - sampling.origin) / sampling.sample_dt + 1e-9) + 1.0;
    return std::min(t_end, sampling.origin + k * sampling.sample_dt);
  };

  if (sampling.include_initial) record(initial);
  if (auto k = monitor.check(y)) {
    // already inside the handoff window
    const auto s = dynamics_detail::unpack(y, t);
    result.collision = dynamics_detail::make_event(s, *k);
    result.final_state = s;
    return result;
  }
  double target = next_sample_after(t);
  while (t_end - t > snap) {
    const double h_cap = target - t;
    auto acc = ode::adaptive_step(rhs, t, y, h_cap, settings.max_step, settings.tolerances(), ctl,
                                  dynamics_detail::strictly_ordered);
    ++result.accepted_steps;
    result.rejected_steps += acc.rejections;
    y = std::move(acc.y);
    const bool landed = std::abs(acc.h_used - h_cap) <= 1e-15 * std::max(1.0, std::abs(target));
    t = landed ? target : acc.t;
    if (t_end - t <= snap) t = t_end;

    const auto fired = monitor.check(y);
    const auto state = dynamics_detail::unpack(y, t);
    if (fired) {
      result.collision = dynamics_detail::make_event(state, *fired);
      result.final_state = state;
      return result;
    }
    const bool on_grid = landed || t == t_end;
    if (!(sampling.sample_dt > 0.0) || on_grid) record(state);
    if (landed || t >= target) target = next_sample_after(t);
  }
  result.final_state = dynamics_detail::unpack(y, t_end);
  if (result.samples.empty() || result.samples.back().t != t_end) record(result.final_state);
  return result;
}

}  // namespace chpeakon
