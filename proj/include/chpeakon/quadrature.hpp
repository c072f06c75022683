#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "chpeakon/errors.hpp"

namespace chpeakon::quadrature {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  /// Upper bound on the number of rule applications (each costs 15 evaluations).
  std::size_t max_segments = 200000;
};

namespace detail {

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool roundoff_limited;  ///< error estimate is the rounding floor; bisection cannot reduce it
  bool operator<(const Segment& other) const { return error < other.error; }
};

/// Kronrod 15 / Gauss 7 pair on [a, b] with the QUADPACK qk15 error heuristic.
template <class F>
Segment apply_rule(F& f, double a, double b) {
  using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
  using Gauss = boost::math::quadrature::gauss<double, 7>;
  static const auto& xk = Kronrod::abscissa();
  static const auto& wk = Kronrod::weights();
  static const auto& wg = Gauss::weights();
  constexpr double eps = std::numeric_limits<double>::epsilon();

  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, 15> fv{};
  fv[0] = f(centre);
  for (std::size_t i = 1; i < 8; ++i) {
    fv[2 * i - 1] = f(centre - half * xk[i]);
    fv[2 * i] = f(centre + half * xk[i]);
  }
  double resk = wk[0] * fv[0];
  double resg = wg[0] * fv[0];
  double resabs = std::abs(resk);
  for (std::size_t i = 1; i < 8; ++i) {
    const double pair = fv[2 * i - 1] + fv[2 * i];
    resk += wk[i] * pair;
    resabs += wk[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 0) resg += wg[i / 2] * pair;  // Gauss nodes are every other Kronrod node
  }
  const double mean = 0.5 * resk;
  double resasc = wk[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < 8; ++i) {
    resasc += wk[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  }
  const double h = std::abs(half);
  resabs *= h;
  resasc *= h;
  double error = std::abs((resk - resg) * half);
  if (resasc != 0.0 && error != 0.0) error = resasc * std::min(1.0, std::pow(200.0 * error / resasc, 1.5));
  const double floor = 50.0 * eps * resabs;
  const bool limited = error <= floor;
  return {a, b, resk * half, std::max(error, floor), limited};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7,15) integration over a partition.
///
/// `breakpoints` must be sorted; the integral runs from the first to the last
/// point and every listed point is a segment boundary, so integrands that are
/// only piecewise smooth converge when their kinks are listed. Refinement
/// always bisects the segment with the largest error estimate until the summed
/// estimate drops below max(rel_tol * |I|, abs_tol), or until the largest
/// estimate is pure rounding error.
template <class F>
double integrate(F&& f, std::span<const double> breakpoints, const Options& options = {}) {
  if (breakpoints.size() < 2) return 0.0;
  std::priority_queue<detail::Segment> queue;
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const double a = breakpoints[i];
    const double b = breakpoints[i + 1];
    if (!(b > a)) continue;
    auto segment = detail::apply_rule(f, a, b);
    total += segment.value;
    total_error += segment.error;
    queue.push(segment);
  }
  std::size_t segments = queue.size();
  while (!queue.empty() && total_error > std::max(options.rel_tol * std::abs(total), options.abs_tol)) {
    if (segments >= options.max_segments) {
      throw QuadratureFailure("adaptive quadrature exceeded its subdivision budget (estimate " +
                              std::to_string(total) + ", error " + std::to_string(total_error) + ")");
    }
    const auto worst = queue.top();
    // Every remaining segment is at or below the rounding floor of this one.
    if (worst.roundoff_limited) break;
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw QuadratureFailure("adaptive quadrature cannot bisect a segment further");
    }
    auto left = detail::apply_rule(f, worst.a, mid);
    auto right = detail::apply_rule(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++segments;
  }
  if (!std::isfinite(total)) throw QuadratureFailure("quadrature produced a non-finite value");
  return total;
}

template <class F>
double integrate(F&& f, double a, double b, const Options& options = {}) {
  const double points[2] = {a, b};
  return integrate(std::forward<F>(f), std::span<const double>(points, 2), options);
}

/// Sorted, de-duplicated copy of `points`.
inline std::vector<double> sorted_unique(std::vector<double> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

/// Extends a sorted partition by geometrically growing tail segments on both
/// sides, long enough that an integrand decaying like exp(-rate * distance)
/// has dropped by a factor of about 1e-17 at the far ends.
inline std::vector<double> with_exponential_tails(std::vector<double> points, double rate) {
  if (points.empty()) points.push_back(0.0);
  const double reach = 40.0 / rate;
  const double lo = points.front();
  const double hi = points.back();
  std::vector<double> out;
  out.reserve(points.size() + 16);
  std::vector<double> offsets;
  for (double d = 0.5; d < reach; d *= 2.0) offsets.push_back(d);
  offsets.push_back(reach);
  for (auto it = offsets.rbegin(); it != offsets.rend(); ++it) out.push_back(lo - *it);
  out.insert(out.end(), points.begin(), points.end());
  for (double d : offsets) out.push_back(hi + d);
  return out;
}

}  // namespace chpeakon::quadrature
