#pragma once

// Reference computations for the tests. Nothing here goes through the library's
// own quadrature engine or field evaluator.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "chpeakon/peakon_field.hpp"

namespace oracle {

/// Sum of Boost's adaptive G-K 61 over consecutive breakpoints, plus tails of
/// length `tail` beyond the first and last point.
template <class F>
double integrate(F f, std::vector<double> points, double tail = 60.0) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (tail > 0.0) {
    const double lo = points.front(), hi = points.back();
    for (double d : {0.5, 2.0, 8.0, 20.0, tail}) {
      points.push_back(lo - d);
      points.push_back(hi + d);
    }
    std::sort(points.begin(), points.end());
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, points[i], points[i + 1], 12, 1e-12);
  }
  return total;
}

/// Non-adaptive variant for integrands that are tiny and noisy far out: each
/// piece is split into `panels` equal G-K 61 panels.
template <class F>
double integrate_panels(F f, std::vector<double> points, double tail = 60.0, int panels = 8) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  const double lo = points.front(), hi = points.back();
  for (double d : {0.5, 2.0, 8.0, 20.0, tail}) {
    points.push_back(lo - d);
    points.push_back(hi + d);
  }
  std::sort(points.begin(), points.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double h = (points[i + 1] - points[i]) / panels;
    for (int k = 0; k < panels; ++k) {
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, points[i] + k * h,
                                                                             points[i] + (k + 1) * h, 0);
    }
  }
  return total;
}

inline double u(const chpeakon::MultipeakonState& s, double x) {
  double sum = 0.0;
  for (const auto& pk : s.peakons) sum += pk.p * std::exp(-std::abs(x - pk.q));
  return sum;
}

inline double ux(const chpeakon::MultipeakonState& s, double x) {
  double sum = 0.0;
  for (const auto& pk : s.peakons) {
    const double d = x - pk.q;
    if (d != 0.0) sum -= pk.p * (d > 0 ? 1.0 : -1.0) * std::exp(-std::abs(d));
  }
  return sum;
}

/// u and u_x of a sorted multipeakon in O(log N) per point: between crests q_k and
/// q_{k+1}, u = L_k e^{-(x - q_k)} + R_k e^{-(q_{k+1} - x)} with L, R accumulated
/// from either end.
class CellField {
 public:
  explicit CellField(const chpeakon::MultipeakonState& s) {
    for (const auto& pk : s.peakons) {
      q_.push_back(pk.q);
      p_.push_back(pk.p);
    }
    const std::size_t n = q_.size();
    left_.assign(n, 0.0);
    right_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) left_[k] = p_[k] + (k ? left_[k - 1] * std::exp(q_[k - 1] - q_[k]) : 0.0);
    for (std::size_t k = n; k-- > 0;) {
      right_[k] = p_[k] + (k + 1 < n ? right_[k + 1] * std::exp(q_[k] - q_[k + 1]) : 0.0);
    }
  }

  /// (u, u_x) at x; u_x is the right derivative at a crest.
  std::pair<double, double> operator()(double x) const {
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(q_.begin(), q_.end(), x) - q_.begin());
    const double l = k ? left_[k - 1] * std::exp(q_[k - 1] - x) : 0.0;
    const double r = k < q_.size() ? right_[k] * std::exp(x - q_[k]) : 0.0;
    return {l + r, r - l};
  }

 private:
  std::vector<double> q_, p_, left_, right_;
};

/// Direct sum 2 sum_ij p_i p_j e^{-|q_i - q_j|}.
inline double energy(const chpeakon::MultipeakonState& s) {
  double sum = 0.0;
  for (const auto& a : s.peakons) {
    for (const auto& b : s.peakons) sum += a.p * b.p * std::exp(-std::abs(a.q - b.q));
  }
  return 2.0 * sum;
}

/// Sorted random state with crest gaps in [min_gap, max_gap] and strengths in [p_lo, p_hi].
inline chpeakon::MultipeakonState random_state(std::mt19937_64& rng, std::size_t n, double p_lo, double p_hi,
                                               double min_gap = 0.5, double max_gap = 2.5) {
  std::uniform_real_distribution<double> gap(min_gap, max_gap), strength(p_lo, p_hi);
  chpeakon::MultipeakonState s;
  double q = -0.5 * (min_gap + max_gap) * static_cast<double>(n - 1) / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.peakons.push_back({q, strength(rng)});
    q += gap(rng);
  }
  return s;
}

/// The peakon system written out directly, y = (q_1..q_N, p_1..p_N).
inline void hsys(const std::vector<double>& y, std::vector<double>& dy, double) {
  const std::size_t n = y.size() / 2;
  dy.assign(y.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = y[i] - y[j];
      const double e = std::exp(-std::abs(d));
      dy[i] += y[n + j] * e;
      if (d != 0.0) dy[n + i] += y[n + i] * y[n + j] * (d > 0 ? 1.0 : -1.0) * e;
    }
  }
}

/// Reference solution by Boost odeint's controlled Fehlberg 7(8).
inline chpeakon::MultipeakonState reference_flow(const chpeakon::MultipeakonState& s, double t_end,
                                                 double tol = 1e-13) {
  const std::size_t n = s.size();
  std::vector<double> y(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = s.peakons[i].q;
    y[n + i] = s.peakons[i].p;
  }
  using Stepper = boost::numeric::odeint::runge_kutta_fehlberg78<std::vector<double>>;
  boost::numeric::odeint::integrate_adaptive(boost::numeric::odeint::make_controlled<Stepper>(tol, tol), hsys, y,
                                             s.t, t_end, 1e-3);
  chpeakon::MultipeakonState out;
  out.t = t_end;
  for (std::size_t i = 0; i < n; ++i) out.peakons.push_back({y[i], y[n + i]});
  return out;
}

}  // namespace oracle
