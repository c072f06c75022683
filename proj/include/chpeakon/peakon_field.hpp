#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chpeakon/errors.hpp"
#include "chpeakon/parallel.hpp"
#include "chpeakon/quadrature.hpp"

namespace chpeakon {

struct Peakon {
  double q = 0.0;  ///< crest position
  double p = 0.0;  ///< strength
};

/// Multipeakon u(x) = sum_i p_i exp(-|x - q_i|) at time t, crests ascending.
struct MultipeakonState {
  std::vector<Peakon> peakons;
  double t = 0.0;

  std::size_t size() const { return peakons.size(); }

  void validate() const {
    if (peakons.empty()) throw InvalidState("multipeakon state needs at least one peakon");
    for (std::size_t i = 0; i < peakons.size(); ++i) {
      if (!std::isfinite(peakons[i].q) || !std::isfinite(peakons[i].p)) {
        throw InvalidState("peakon " + std::to_string(i) + " has a non-finite field");
      }
      if (i > 0 && peakons[i].q < peakons[i - 1].q) {
        throw InvalidState("peakon crests must be sorted ascending");
      }
    }
    if (!std::isfinite(t)) throw InvalidState("state time is not finite");
  }

  std::vector<double> positions() const {
    std::vector<double> out;
    out.reserve(peakons.size());
    for (const auto& pk : peakons) out.push_back(pk.q);
    return out;
  }
  std::vector<double> strengths() const {
    std::vector<double> out;
    out.reserve(peakons.size());
    for (const auto& pk : peakons) out.push_back(pk.p);
    return out;
  }
};

/// Exponential decay rate alpha in (0, 1) of the weighted space.
class DecayParameters {
 public:
  explicit DecayParameters(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw DomainError("decay exponent alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
  }
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

struct FieldDiagnostics {
  double hamiltonian = 0.0;
  double energy_h1 = 0.0;        ///< E = int u^2 + u_x^2
  double weighted_energy = 0.0;  ///< I = int (u^2 + u_x^2) e^{alpha|x|}
  double sup_weighted_u = 0.0;   ///< sup u^2 e^{alpha|x|}
  double l1_ux = 0.0;
  double sup_weighted_P = 0.0;   ///< K = sup P^u e^{alpha|x|}
  double sup_weighted_Px = 0.0;  ///< sup |P^u_x| e^{alpha|x|}
  double sup_u_squared = 0.0;    ///< sup u^2
};

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Direct O(N) evaluation of u(x).
inline double evaluate_u(const MultipeakonState& state, double x) {
  double sum = 0.0;
  for (const auto& pk : state.peakons) sum += pk.p * std::exp(-std::abs(x - pk.q));
  return sum;
}

/// Direct O(N) evaluation of u_x(x); a crest contributes nothing at its own position.
inline double evaluate_ux(const MultipeakonState& state, double x) {
  double sum = 0.0;
  for (const auto& pk : state.peakons) sum -= pk.p * sign0(x - pk.q) * std::exp(-std::abs(x - pk.q));
  return sum;
}

inline double hamiltonian(const MultipeakonState& state) {
  double sum = 0.0;
  for (const auto& a : state.peakons) {
    for (const auto& b : state.peakons) sum += a.p * b.p * std::exp(-std::abs(a.q - b.q));
  }
  return 0.5 * sum;
}

/// O(log N) evaluator built from running left/right exponential sums.
///
/// For x strictly between crests k and k+1, u = a_k e^{-(x-q_k)} + b_{k+1} e^{-(q_{k+1}-x)}
/// with a_k = sum_{i<=k} p_i e^{-(q_k-q_i)} and b_k = sum_{i>=k} p_i e^{-(q_i-q_k)}.
/// Both recurrences only multiply by factors <= 1, so they never overflow.
class PeakonField {
 public:
  explicit PeakonField(const MultipeakonState& state) {
    const std::size_t n = state.size();
    q_.resize(n);
    p_.resize(n);
    left_.resize(n);
    right_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      q_[i] = state.peakons[i].q;
      p_[i] = state.peakons[i].p;
    }
    for (std::size_t i = 0; i < n; ++i) {
      left_[i] = p_[i] + (i > 0 ? left_[i - 1] * std::exp(-(q_[i] - q_[i - 1])) : 0.0);
    }
    for (std::size_t i = n; i-- > 0;) {
      right_[i] = p_[i] + (i + 1 < n ? right_[i + 1] * std::exp(-(q_[i + 1] - q_[i])) : 0.0);
    }
  }

  /// (u, u_x) at x.
  std::pair<double, double> eval(double x) const {
    const std::size_t lo = static_cast<std::size_t>(std::lower_bound(q_.begin(), q_.end(), x) - q_.begin());
    const std::size_t hi = static_cast<std::size_t>(std::upper_bound(q_.begin(), q_.end(), x) - q_.begin());
    const double left = lo > 0 ? left_[lo - 1] * std::exp(-(x - q_[lo - 1])) : 0.0;
    const double right = hi < q_.size() ? right_[hi] * std::exp(-(q_[hi] - x)) : 0.0;
    double middle = 0.0;
    for (std::size_t i = lo; i < hi; ++i) middle += p_[i];
    return {left + middle + right, right - left};
  }
  double u(double x) const { return eval(x).first; }
  double ux(double x) const { return eval(x).second; }

  std::span<const double> crests() const { return q_; }
  std::span<const double> strengths() const { return p_; }

  /// Distinct crest positions, ascending.
  std::vector<double> breakpoints() const { return quadrature::sorted_unique(q_); }

  /// Points strictly between consecutive crests where u_x changes sign.
  std::vector<double> slope_zeros() const {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < q_.size(); ++k) {
      const double a = left_[k];
      const double b = right_[k + 1];
      const double gap = q_[k + 1] - q_[k];
      if (gap <= 0.0 || a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0)) continue;
      // -a e^{-s} + b e^{-(gap - s)} = 0  =>  s = (gap + ln(a/b)) / 2
      const double s = 0.5 * (gap + std::log(a / b));
      if (s > 0.0 && s < gap) out.push_back(q_[k] + s);
    }
    return out;
  }

 private:
  std::vector<double> q_;
  std::vector<double> p_;
  std::vector<double> left_;
  std::vector<double> right_;
};

namespace field_detail {

inline quadrature::Options default_options() { return {1e-11, 1e-300, 400000}; }

inline std::vector<double> partition(const PeakonField& field, std::vector<double> extra, double rate) {
  auto points = field.breakpoints();
  points.insert(points.end(), extra.begin(), extra.end());
  return quadrature::with_exponential_tails(quadrature::sorted_unique(std::move(points)), rate);
}

}  // namespace field_detail

/// E = int (u^2 + u_x^2) dx by piecewise adaptive quadrature.
inline double energy_h1(const MultipeakonState& state) {
  const PeakonField field(state);
  const auto points = field_detail::partition(field, {}, 2.0);
  return quadrature::integrate(
      [&](double x) {
        const auto [u, ux] = field.eval(x);
        return u * u + ux * ux;
      },
      points, field_detail::default_options());
}

/// C^{alpha,u} = int (u^2 + u_x^2) e^{alpha|x|} dx.
inline double weighted_energy(const MultipeakonState& state, double alpha) {
  const PeakonField field(state);
  const auto points = field_detail::partition(field, {0.0}, 2.0 - alpha);
  return quadrature::integrate(
      [&](double x) {
        const auto [u, ux] = field.eval(x);
        return (u * u + ux * ux) * std::exp(alpha * std::abs(x));
      },
      points, field_detail::default_options());
}

/// ||u_x||_{L^1}.
inline double l1_ux(const MultipeakonState& state) {
  const PeakonField field(state);
  const auto points = field_detail::partition(field, field.slope_zeros(), 1.0);
  return quadrature::integrate([&](double x) { return std::abs(field.ux(x)); }, points,
                               field_detail::default_options());
}

/// P^u(x) = 1/2 e^{-|x|} * (u^2 + u_x^2 / 2).
inline double convolution_P(const PeakonField& field, double x) {
  const auto points = field_detail::partition(field, {x}, 2.0);
  return quadrature::integrate(
      [&](double y) {
        const auto [u, uy] = field.eval(y);
        return 0.5 * std::exp(-std::abs(x - y)) * (u * u + 0.5 * uy * uy);
      },
      points, field_detail::default_options());
}

inline double convolution_P(const MultipeakonState& state, double x) { return convolution_P(PeakonField(state), x); }

/// P^u_x(x) = -1/2 int sign(x - y) e^{-|x-y|} (u^2 + u_x^2 / 2)(y) dy.
inline double convolution_Px(const PeakonField& field, double x) {
  const auto points = field_detail::partition(field, {x}, 2.0);
  return quadrature::integrate(
      [&](double y) {
        const auto [u, uy] = field.eval(y);
        return -0.5 * sign0(x - y) * std::exp(-std::abs(x - y)) * (u * u + 0.5 * uy * uy);
      },
      points, field_detail::default_options());
}

inline double convolution_Px(const MultipeakonState& state, double x) {
  return convolution_Px(PeakonField(state), x);
}

/// Closed form of int e^{alpha|x|} e^{-|x-y|} dx, valid for |alpha| < 1.
inline double kernel_weight_integral(double alpha, double y) {
  if (!(std::abs(alpha) < 1.0)) {
    throw DomainError("kernel_weight_integral requires |alpha| < 1, got " + std::to_string(alpha));
  }
  const double denom = 1.0 - alpha * alpha;
  return 2.0 * alpha / denom * std::exp(-std::abs(y)) + 2.0 / denom * std::exp(alpha * std::abs(y));
}

/// Sample points used for suprema over x: every crest, 64 uniform points per
/// inter-crest interval, the origin, and a coarse grid over eight units of
/// each exponential tail.
inline std::vector<double> supremum_grid(const MultipeakonState& state) {
  const auto crests = quadrature::sorted_unique(state.positions());
  std::vector<double> grid(crests.begin(), crests.end());
  grid.push_back(0.0);
  constexpr int kPerInterval = 64;
  for (std::size_t k = 0; k + 1 < crests.size(); ++k) {
    const double a = crests[k];
    const double b = crests[k + 1];
    for (int j = 1; j < kPerInterval; ++j) grid.push_back(a + (b - a) * j / kPerInterval);
  }
  constexpr int kTail = 32;
  for (int j = 1; j <= kTail; ++j) {
    const double d = 8.0 * j / kTail;
    grid.push_back(crests.front() - d);
    grid.push_back(crests.back() + d);
  }
  return quadrature::sorted_unique(std::move(grid));
}

/// (max_x u^2, E): the two sides of ||u^2||_inf <= ||u||_{H^1}^2.
inline std::pair<double, double> sobolev_sup_check(const MultipeakonState& state) {
  const PeakonField field(state);
  double lhs = 0.0;
  for (double x : supremum_grid(state)) lhs = std::max(lhs, std::pow(field.u(x), 2));
  return {lhs, energy_h1(state)};
}

/// All weighted a-priori quantities of a multipeakon. `threads` only splits the
/// supremum grid; results do not depend on it.
inline FieldDiagnostics weighted_diagnostics(const MultipeakonState& state, const DecayParameters& decay,
                                             unsigned threads = 1) {
  state.validate();
  const double alpha = decay.alpha();
  const PeakonField field(state);
  FieldDiagnostics d;
  d.hamiltonian = hamiltonian(state);
  d.energy_h1 = energy_h1(state);
  d.weighted_energy = weighted_energy(state, alpha);
  d.l1_ux = l1_ux(state);

  const auto grid = supremum_grid(state);
  struct PointValues {
    double u2w = 0.0, u2 = 0.0, pw = 0.0, pxw = 0.0;
  };
  const auto values = parallel_map(grid.size(), threads, [&](std::size_t i) {
    const double x = grid[i];
    const double w = std::exp(alpha * std::abs(x));
    const double u = field.u(x);
    PointValues v;
    v.u2 = u * u;
    v.u2w = u * u * w;
    v.pw = convolution_P(field, x) * w;
    v.pxw = std::abs(convolution_Px(field, x)) * w;
    return v;
  });
  for (const auto& v : values) {
    d.sup_weighted_u = std::max(d.sup_weighted_u, v.u2w);
    d.sup_u_squared = std::max(d.sup_u_squared, v.u2);
    d.sup_weighted_P = std::max(d.sup_weighted_P, v.pw);
    d.sup_weighted_Px = std::max(d.sup_weighted_Px, v.pxw);
  }
  return d;
}

}  // namespace chpeakon
