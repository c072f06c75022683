#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chpeakon/errors.hpp"
#include "chpeakon/hamiltonian_dynamics.hpp"
#include "chpeakon/ode.hpp"
#include "chpeakon/peakon_field.hpp"

namespace chpeakon {

/// Peakon-antipeakon pair (-q, p), (q, -p) written as zeta = p^2 q, omega = arctan p.
/// The collision is the regular point omega = pi/2.
struct SymmetricRescaledState {
  double zeta = 0.0;
  double omega = 0.0;
  double t = 0.0;
};

/// Colliding pair in the variables z = p2 + p1, w = 2 arctan(p2 - p1) (taken in
/// (0, 2 pi)), eta = q2 + q1 and zeta = (p2 - p1)^2 (q2 - q1), plus every other peakon.
struct RescaledCollisionState {
  double z = 0.0;
  double w = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  std::vector<Peakon> spectators;
  double t = 0.0;

  double cot_half_w() const { return std::cos(0.5 * w) / std::sin(0.5 * w); }
  /// Crest gap q2 - q1 = zeta cot^2(w/2).
  double gap() const {
    const double k = cot_half_w();
    return zeta * k * k;
  }
};

/// Kernels of s that appear multiplied by powers of tan(w/2); each is finite at s = 0.
struct StableKernels {
  static constexpr double kSeriesThreshold = 1e-4;

  double s = 0.0;
  double exp_neg = 1.0;     ///< e^{-s}
  double phi1 = 1.0;        ///< (1 - e^{-s}) / s
  double phi2 = 0.5;        ///< (1 - e^{-s} - s e^{-s}) / s^2
  double sinh_half = 0.0;   ///< sinh(s/2)
  double cosh_half = 1.0;   ///< cosh(s/2)
  double sinhc_half = 1.0;  ///< sinh(s/2) / (s/2)

  static StableKernels series(double s) {
    StableKernels k;
    k.s = s;
    k.exp_neg = std::exp(-s);
    k.phi1 = 1.0 - s / 2.0 + s * s / 6.0 - s * s * s / 24.0 + s * s * s * s / 120.0;
    k.phi2 = 0.5 - s / 3.0 + s * s / 8.0 - s * s * s / 30.0 + s * s * s * s / 144.0;
    const double h2 = 0.25 * s * s;
    k.sinhc_half = 1.0 + h2 / 6.0 + h2 * h2 / 120.0 + h2 * h2 * h2 / 5040.0;
    k.sinh_half = 0.5 * s * k.sinhc_half;
    k.cosh_half = std::cosh(0.5 * s);
    return k;
  }

  static StableKernels direct(double s) {
    StableKernels k;
    k.s = s;
    k.exp_neg = std::exp(-s);
    k.phi1 = -std::expm1(-s) / s;
    // e^{-s}(e^s - 1 - s); the subtraction is exact but expm1 must carry the
    // extra bits, hence long double.
    const long double ls = s;
    k.phi2 = static_cast<double>(std::exp(-ls) * (std::expm1(ls) - ls) / (ls * ls));
    k.sinh_half = std::sinh(0.5 * s);
    k.cosh_half = std::cosh(0.5 * s);
    k.sinhc_half = k.sinh_half / (0.5 * s);
    return k;
  }

  static StableKernels at(double s) {
    return std::abs(s) < kSeriesThreshold ? series(s) : direct(s);
  }
};

struct SymmetricDerivative {
  double dzeta;
  double domega;
};

/// Vector field of the symmetric pair in (zeta, omega).
///
/// With sigma = 2 zeta cot^2(omega) the crest gap, the peakon system reduces to
///   zeta'  = -4 zeta^2 cot(omega) (1 - e^{-sigma} - sigma e^{-sigma}) / sigma^2
///   omega' = sin^2(omega) e^{-sigma}
/// which is smooth through omega = pi/2 where it equals (0, 1).
inline SymmetricDerivative rhs_symmetric(const SymmetricRescaledState& state) {
  const double cot = std::cos(state.omega) / std::sin(state.omega);
  const double sigma = 2.0 * state.zeta * cot * cot;
  const auto k = StableKernels::at(sigma);
  const double s = std::sin(state.omega);
  return {-4.0 * state.zeta * state.zeta * cot * k.phi2, s * s * k.exp_neg};
}

/// Peakons of a symmetric state: (-q, p) and (q, -p) with p = tan(omega), q = zeta / p^2.
inline MultipeakonState symmetric_to_peakons(const SymmetricRescaledState& state) {
  const double p = std::tan(state.omega);
  const double q = state.zeta / (p * p);
  MultipeakonState out;
  out.t = state.t;
  out.peakons = {{-q, p}, {q, -p}};
  return out;
}

/// Inverse of symmetric_to_peakons for a pair (-q, p), (q, -p) with p > 0 before the collision.
inline SymmetricRescaledState peakons_to_symmetric(double q, double p, double t) {
  double omega = std::atan(p);
  if (omega < 0.0) omega += std::numbers::pi;
  return {p * p * q, omega, t};
}

/// Time derivative of every field of a RescaledCollisionState.
struct RescaledDerivative {
  double dz = 0.0;
  double dw = 0.0;
  double deta = 0.0;
  double dzeta = 0.0;
  std::vector<double> dq;  ///< spectators
  std::vector<double> dp;
};

namespace continuation_detail {

/// Right/left spectator sums R = sum_right p_j e^{-(q_j - c)} and L = sum_left p_j e^{-(c - q_j)}
/// with c = eta / 2 the cluster centre.
struct ClusterCoupling {
  double right = 0.0;
  double left = 0.0;
};

inline ClusterCoupling coupling(const RescaledCollisionState& s) {
  ClusterCoupling c;
  const double centre = 0.5 * s.eta;
  for (const auto& pk : s.spectators) {
    if (pk.q > centre) c.right += pk.p * std::exp(-(pk.q - centre));
    else c.left += pk.p * std::exp(-(centre - pk.q));
  }
  return c;
}

inline void check_spectators(const RescaledCollisionState& s) {
  const double centre = 0.5 * s.eta;
  const double half_gap = 0.5 * s.gap();
  for (const auto& pk : s.spectators) {
    if (std::abs(pk.q - centre) <= half_gap) {
      throw SpectatorOverlap("spectator crest at " + std::to_string(pk.q) + " entered the collision cluster");
    }
  }
}

}  // namespace continuation_detail

/// Right-hand side of the rescaled pair system with spectators.
///
/// With kappa = cot(w/2), d = zeta kappa^2 (crest gap), S = R + L and D = R - L:
///   w'    = (z^2 cos^2(w/2) - sin^2(w/2)) e^{-d} - sin(w) D cosh(d/2) - 2 z cos^2(w/2) S sinh(d/2)
///   z'    = -D z cosh(d/2) - S sinh(d/2) / kappa
///   eta'  = z (1 + e^{-d}) + 2 S cosh(d/2)
///   zeta' = z^2 zeta kappa e^{-d} + zeta^2 kappa phi2(d) - 2 z S zeta kappa sinh(d/2)
///           + 2 D zeta (sinh(d/2) / d - cosh(d/2))
/// and a spectator right (left) of the cluster feels +(-) e^{-|q - eta/2|} (z cosh(d/2) +(-) sinh(d/2)/kappa).
/// Every term is evaluated through finite kernels, so w = pi (kappa = 0) is an ordinary point.
inline RescaledDerivative rhs_general(const RescaledCollisionState& s) {
  continuation_detail::check_spectators(s);
  const double half = 0.5 * s.w;
  const double sin_half = std::sin(half);
  const double cos_half = std::cos(half);
  const double kappa = cos_half / sin_half;
  const double d = s.zeta * kappa * kappa;
  const auto k = StableKernels::at(d);
  const auto cpl = continuation_detail::coupling(s);
  const double S = cpl.right + cpl.left;
  const double D = cpl.right - cpl.left;
  // sinh(d/2) / kappa = (zeta kappa / 2) sinhc(d/2)
  const double delta_sinh = 0.5 * s.zeta * kappa * k.sinhc_half;
  // sinh(d/2) / d - cosh(d/2)
  const double hd = 0.5 * k.sinhc_half - k.cosh_half;

  RescaledDerivative out;
  out.dw = (s.z * s.z * cos_half * cos_half - sin_half * sin_half) * k.exp_neg - std::sin(s.w) * D * k.cosh_half -
           2.0 * s.z * cos_half * cos_half * S * k.sinh_half;
  out.dz = -D * s.z * k.cosh_half - S * delta_sinh;
  out.deta = s.z * (1.0 + k.exp_neg) + 2.0 * S * k.cosh_half;
  out.dzeta = s.z * s.z * s.zeta * kappa * k.exp_neg + s.zeta * s.zeta * kappa * k.phi2 -
              2.0 * s.z * S * s.zeta * kappa * k.sinh_half + 2.0 * D * s.zeta * hd;

  const std::size_t m = s.spectators.size();
  out.dq.assign(m, 0.0);
  out.dp.assign(m, 0.0);
  const double centre = 0.5 * s.eta;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& pi = s.spectators[i];
    double dq = 0.0;
    double dp = 0.0;
    for (const auto& pj : s.spectators) {
      const double e = std::exp(-std::abs(pi.q - pj.q));
      dq += pj.p * e;
      dp += pj.p * sign0(pi.q - pj.q) * e;
    }
    if (pi.q > centre) {
      const double c = std::exp(-(pi.q - centre)) * (s.z * k.cosh_half + delta_sinh);
      dq += c;
      dp += c;
    } else {
      const double c = std::exp(-(centre - pi.q)) * (s.z * k.cosh_half - delta_sinh);
      dq += c;
      dp -= c;
    }
    out.dq[i] = dq;
    out.dp[i] = pi.p * dp;
  }
  return out;
}

/// Rescaled state at the handoff recorded in `event`.
inline RescaledCollisionState enter_rescaled(const CollisionEvent& event) {
  event.validate();
  const auto& [a, b] = event.pair;
  RescaledCollisionState s;
  s.z = a.p + b.p;
  s.w = 2.0 * std::atan(b.p - a.p);
  if (s.w < 0.0) s.w += 2.0 * std::numbers::pi;
  s.eta = a.q + b.q;
  s.zeta = event.e_tau;
  s.spectators = event.spectators;
  s.t = event.tau;
  return s;
}

/// Back to peakons once the pair has separated by at least gap_min.
inline MultipeakonState exit_rescaled(const RescaledCollisionState& s, double gap_min) {
  const double sin_half = std::sin(0.5 * s.w);
  if (!(std::abs(sin_half) > 1e-300) || !(s.w > 0.0 && s.w < 2.0 * std::numbers::pi)) {
    throw NotYetSeparated("w must stay inside (0, 2 pi) to recover the pair");
  }
  const double kappa = s.cot_half_w();
  const double gap = s.zeta * kappa * kappa;
  if (kappa == 0.0 || !(gap >= gap_min)) {
    throw NotYetSeparated("pair gap " + std::to_string(gap) + " is below " + std::to_string(gap_min));
  }
  const double delta = 1.0 / kappa;
  MultipeakonState out;
  out.t = s.t;
  out.peakons = s.spectators;
  out.peakons.push_back({0.5 * (s.eta - gap), 0.5 * (s.z - delta)});
  out.peakons.push_back({0.5 * (s.eta + gap), 0.5 * (s.z + delta)});
  std::stable_sort(out.peakons.begin(), out.peakons.end(),
                   [](const Peakon& x, const Peakon& y) { return x.q < y.q; });
  return out;
}

struct ContinuationResult {
  MultipeakonState state;                       ///< peakons after the pair has separated
  RescaledCollisionState entry;
  RescaledCollisionState exit;
  std::vector<RescaledCollisionState> trace;    ///< every accepted rescaled step
  double collision_time = 0.0;                  ///< instant at which w crosses pi
  bool reached_stop_time = false;               ///< stopped at t_stop before separating
};

namespace continuation_detail {

inline ode::Vector pack(const RescaledCollisionState& s) {
  ode::Vector y{s.z, s.w, s.eta, s.zeta};
  for (const auto& pk : s.spectators) y.push_back(pk.q);
  for (const auto& pk : s.spectators) y.push_back(pk.p);
  return y;
}

inline RescaledCollisionState unpack(const ode::Vector& y, double t) {
  RescaledCollisionState s;
  s.z = y[0];
  s.w = y[1];
  s.eta = y[2];
  s.zeta = y[3];
  const std::size_t m = (y.size() - 4) / 2;
  s.spectators.resize(m);
  for (std::size_t i = 0; i < m; ++i) s.spectators[i] = {y[4 + i], y[4 + m + i]};
  s.t = t;
  return s;
}

}  // namespace continuation_detail

/// Integrates the rescaled system from the handoff until the pair has passed
/// through the collision (w < pi) and separated by at least settings.handoff_gap.
/// When t_stop is given and reached first, the state at t_stop is returned with
/// reached_stop_time set.
inline ContinuationResult continue_through_collision(const CollisionEvent& event, const IntegratorSettings& settings,
                                                     std::optional<double> t_stop = std::nullopt,
                                                     double time_budget = 50.0) {
  settings.validate();
  ContinuationResult result;
  result.entry = enter_rescaled(event);
  result.trace.push_back(result.entry);
  result.collision_time = std::numeric_limits<double>::quiet_NaN();

  auto rhs = [](double t, const ode::Vector& y) {
    const auto d = rhs_general(continuation_detail::unpack(y, t));
    ode::Vector out{d.dz, d.dw, d.deta, d.dzeta};
    out.insert(out.end(), d.dq.begin(), d.dq.end());
    out.insert(out.end(), d.dp.begin(), d.dp.end());
    return out;
  };
  auto admissible = [](const ode::Vector& y) {
    return y[1] > 0.0 && y[1] < 2.0 * std::numbers::pi && y[3] >= 0.0;
  };

  ode::Controller ctl;
  ode::Vector y = continuation_detail::pack(result.entry);
  double t = result.entry.t;
  const double pi = std::numbers::pi;
  for (;;) {
    const double w = y[1];
    if (w < pi) {
      const auto s = continuation_detail::unpack(y, t);
      if (s.gap() >= settings.handoff_gap) {
        result.exit = s;
        result.state = exit_rescaled(s, settings.handoff_gap);
        return result;
      }
    }
    if (t_stop && t >= *t_stop) {
      const auto s = continuation_detail::unpack(y, t);
      result.exit = s;
      result.state = exit_rescaled(s, 0.0);
      result.reached_stop_time = true;
      return result;
    }
    if (t - result.entry.t > time_budget) {
      throw ContinuationStalled("pair did not separate within " + std::to_string(time_budget) + " time units");
    }
    const double h_cap = t_stop ? *t_stop - t : std::numeric_limits<double>::infinity();
    auto acc = ode::adaptive_step(rhs, t, y, h_cap, settings.max_step, settings.tolerances(), ctl, admissible);
    const double w_before = y[1];
    const double t_before = t;
    y = std::move(acc.y);
    t = (t_stop && acc.h_used == h_cap) ? *t_stop : acc.t;
    if (w_before >= pi && y[1] < pi) {
      result.collision_time = t_before + (t - t_before) * (w_before - pi) / (w_before - y[1]);
    }
    auto s = continuation_detail::unpack(y, t);
    continuation_detail::check_spectators(s);
    result.trace.push_back(std::move(s));
  }
}

struct CollisionRecord {
  CollisionEvent event;
  ContinuationResult continuation;
};

struct EvolutionResult {
  std::vector<TrajectorySample> samples;
  std::vector<CollisionRecord> collisions;
  MultipeakonState final_state;
};

/// Conservative multipeakon solution on [state.t, t_end]: the peakon system
/// between interactions, the rescaled system through each binary collision.
inline EvolutionResult evolve(const MultipeakonState& initial, double t_end, const IntegratorSettings& settings,
                              SamplingOptions sampling = {}, std::size_t max_collisions = 64) {
  EvolutionResult out;
  sampling.origin = initial.t;
  MultipeakonState current = initial;
  for (;;) {
    auto sim = simulate(current, t_end, settings, sampling);
    out.samples.insert(out.samples.end(), std::make_move_iterator(sim.samples.begin()),
                       std::make_move_iterator(sim.samples.end()));
    if (!sim.collision) {
      out.final_state = std::move(sim.final_state);
      return out;
    }
    if (out.collisions.size() >= max_collisions) {
      throw ContinuationStalled("more than " + std::to_string(max_collisions) + " collisions before t_end");
    }
    auto cont = continue_through_collision(*sim.collision, settings, t_end);
    current = cont.state;
    const bool done = cont.reached_stop_time;
    out.collisions.push_back({std::move(*sim.collision), std::move(cont)});
    if (done) {
      out.final_state = current;
      if (sampling.alpha || sampling.sample_dt > 0.0) {
        TrajectorySample last{current.t, current, std::nullopt};
        if (sampling.alpha) last.diagnostics = weighted_diagnostics(current, DecayParameters(*sampling.alpha), sampling.threads);
        out.samples.push_back(std::move(last));
      }
      return out;
    }
    sampling.include_initial = false;
  }
}

}  // namespace chpeakon
