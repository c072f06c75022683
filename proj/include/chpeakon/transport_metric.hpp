#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "chpeakon/errors.hpp"
#include "chpeakon/parallel.hpp"
#include "chpeakon/peakon_field.hpp"
#include "chpeakon/quadrature.hpp"

namespace chpeakon {

/// A point (x, u(x), 2 arctan u_x(x)) on the graph of u, the angle on the circle.
struct GraphPoint {
  double x = 0.0;
  double u = 0.0;
  double theta = 0.0;  ///< in (-pi, pi]
};

inline GraphPoint graph_point(const PeakonField& field, double x) {
  const auto [u, ux] = field.eval(x);
  return {x, u, 2.0 * std::atan(ux)};
}

/// Geodesic distance on the circle of length 2 pi.
inline double circle_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

/// min{|x - x'| + |u - u'| + |theta - theta'|_circle, 1}.
inline double d_diamond(const GraphPoint& a, const GraphPoint& b) {
  return std::min(std::abs(a.x - b.x) + std::abs(a.u - b.u) + circle_distance(a.theta, b.theta), 1.0);
}

/// Increasing piecewise-linear psi through the knots, identity outside them.
struct TransportPlan {
  static constexpr double kMinSlope = 1e-9;

  std::vector<std::pair<double, double>> knots;  ///< (x, psi(x)), strictly increasing in both

  static TransportPlan identity() { return {}; }

  /// Throws DomainError unless the plan is continuous, monotone with slope >= 1e-9,
  /// and its end knots lie on the diagonal.
  void validate() const {
    for (const auto& [x, y] : knots) {
      if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("transport plan knots must be finite");
    }
    if (knots.empty()) return;
    if (knots.front().first != knots.front().second || knots.back().first != knots.back().second) {
      throw DomainError("transport plan must start and end on the identity");
    }
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const double dx = knots[k + 1].first - knots[k].first;
      const double dy = knots[k + 1].second - knots[k].second;
      if (!(dx > 0.0) || !(dy >= kMinSlope * dx)) {
        throw DomainError("transport plan must be strictly increasing with slope >= 1e-9");
      }
    }
  }

  /// Index of the linear piece containing x: 0 left of all knots, knots.size() right of them.
  std::size_t piece(double x) const {
    return static_cast<std::size_t>(
        std::upper_bound(knots.begin(), knots.end(), x, [](double v, const auto& k) { return v < k.first; }) -
        knots.begin());
  }

  double operator()(double x) const {
    const std::size_t i = piece(x);
    if (i == 0 || i == knots.size()) return x;
    const auto& [x0, y0] = knots[i - 1];
    const auto& [x1, y1] = knots[i];
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }

  /// psi'(x), right-continuous at knots.
  double slope(double x) const {
    const std::size_t i = piece(x);
    if (i == 0 || i == knots.size()) return 1.0;
    return (knots[i].second - knots[i - 1].second) / (knots[i].first - knots[i - 1].first);
  }

  TransportPlan inverse() const {
    TransportPlan out;
    out.knots.reserve(knots.size());
    for (const auto& [x, y] : knots) out.knots.emplace_back(y, x);
    return out;
  }
};

struct PlanEvaluation {
  double j_value = 0.0;
  double transport_cost = 0.0;
  double mass_mismatch = 0.0;
};

/// (phi_1(x), phi_2(psi(x))): the fractions of the densities 1 + u_x^2 at x and
/// (1 + v_x^2(psi(x))) psi'(x) that are transported.
inline std::pair<double, double> phi_weights(const MultipeakonState& u, const MultipeakonState& v,
                                             const TransportPlan& plan, double x) {
  const double ux = evaluate_ux(u, x);
  const double vx = evaluate_ux(v, plan(x));
  const double mu = 1.0 + ux * ux;
  const double mv = (1.0 + vx * vx) * plan.slope(x);
  return {std::min(1.0, mv / mu), std::min(1.0, mu / mv)};
}

namespace metric_detail {

inline quadrature::Options options() { return {1e-9, 1e-15, 200000}; }

/// Fields of u and v with the crest lists the integration partition needs.
class Evaluator {
 public:
  Evaluator(const MultipeakonState& u, const MultipeakonState& v)
      : fu_(u), fv_(v), ucrests_(fu_.breakpoints()), vcrests_(fv_.breakpoints()) {}

  const PeakonField& u() const { return fu_; }
  const PeakonField& v() const { return fv_; }

  /// Number of pieces of `plan`: left tail, one per knot gap, right tail.
  static std::size_t pieces(const TransportPlan& plan) { return plan.knots.size() + 1; }

  /// (transport cost, mass mismatch) restricted to piece i of the plan.
  std::pair<double, double> piece_cost(const TransportPlan& plan, std::size_t i) const {
    const auto& k = plan.knots;
    const double inf = std::numeric_limits<double>::infinity();
    const double lo = i == 0 ? -inf : k[i - 1].first;
    const double hi = i == k.size() ? inf : k[i].first;
    double slope = 1.0, y0 = 0.0, x0 = 0.0;
    const bool tail = (i == 0 || i == k.size());
    if (!tail) {
      x0 = k[i - 1].first;
      y0 = k[i - 1].second;
      slope = (k[i].second - y0) / (k[i].first - x0);
    }
    auto psi = [&](double x) { return tail ? x : y0 + slope * (x - x0); };

    std::vector<double> points;
    for (double c : ucrests_) {
      if (c > lo && c < hi) points.push_back(c);
    }
    for (double c : vcrests_) {
      const double pre = tail ? c : x0 + (c - y0) / slope;
      if (pre > lo && pre < hi) points.push_back(pre);
    }
    if (std::isfinite(lo)) points.push_back(lo);
    if (std::isfinite(hi)) points.push_back(hi);
    points = quadrature::sorted_unique(std::move(points));
    if (tail) {
      std::vector<double> filtered;
      for (double x : quadrature::with_exponential_tails(points, 1.0)) {
        if (x >= lo && x <= hi) filtered.push_back(x);
      }
      points = std::move(filtered);
    }

    auto densities = [&](double x) {
      const auto [u, ux] = fu_.eval(x);
      const double y = psi(x);
      const auto [v, vy] = fv_.eval(y);
      const double mu = 1.0 + ux * ux;
      const double mv = (1.0 + vy * vy) * slope;
      const GraphPoint a{x, u, 2.0 * std::atan(ux)};
      const GraphPoint b{y, v, 2.0 * std::atan(vy)};
      // mu - mv without the cancellation of the two leading ones
      const double diff = (1.0 - slope) + (ux * ux - vy * vy * slope);
      return std::pair{d_diamond(a, b) * std::min(mu, mv), std::abs(diff)};
    };
    const double transport =
        quadrature::integrate([&](double x) { return densities(x).first; }, points, options());
    const double mismatch =
        quadrature::integrate([&](double x) { return densities(x).second; }, points, options());
    return {transport, mismatch};
  }

 private:
  PeakonField fu_;
  PeakonField fv_;
  std::vector<double> ucrests_;
  std::vector<double> vcrests_;
};

inline PlanEvaluation sum(const std::vector<std::pair<double, double>>& costs) {
  PlanEvaluation e;
  for (const auto& [t, m] : costs) {
    e.transport_cost += t;
    e.mass_mismatch += m;
  }
  e.j_value = e.transport_cost + e.mass_mismatch;
  return e;
}

}  // namespace metric_detail

/// J^psi(u, v) = int d(X^u, X^v) phi_1 (1 + u_x^2) dx + int |1 + u_x^2 - (1 + v_x^2(psi)) psi'| dx.
inline PlanEvaluation j_functional(const MultipeakonState& u, const MultipeakonState& v, const TransportPlan& plan,
                                   unsigned threads = 1) {
  u.validate();
  v.validate();
  plan.validate();
  const metric_detail::Evaluator ev(u, v);
  const auto costs = parallel_map(metric_detail::Evaluator::pieces(plan), threads,
                                  [&](std::size_t i) { return ev.piece_cost(plan, i); });
  return metric_detail::sum(costs);
}

struct MinimizeOptions {
  std::size_t budget = 8;       ///< refinement sweeps
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<TransportPlan> extra_candidates;  ///< e.g. a warm start; invalid plans are skipped
};

struct MinimizeResult {
  TransportPlan plan;
  PlanEvaluation evaluation;
  std::size_t sweeps = 0;
};

namespace metric_detail {

/// Monotone matching of sorted crest lists a and b minimizing sum |a_i - b_j| plus
/// one per unmatched crest. The cost is symmetric in (a, b).
inline std::vector<std::pair<double, double>> match_crests(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> dp((n + 1) * (m + 1), 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<double>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      at(i, j) = std::min({at(i - 1, j - 1) + std::abs(a[i - 1] - b[j - 1]), at(i - 1, j) + 1.0, at(i, j - 1) + 1.0});
    }
  }
  std::vector<std::pair<double, double>> pairs;
  std::size_t i = n, j = m;
  while (i > 0 && j > 0) {
    if (at(i, j) == at(i - 1, j - 1) + std::abs(a[i - 1] - b[j - 1])) {
      pairs.emplace_back(a[i - 1], b[j - 1]);
      --i;
      --j;
    } else if (at(i, j) == at(i - 1, j) + 1.0) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(pairs.begin(), pairs.end());
  return pairs;
}

inline std::pair<double, double> hull(const std::vector<double>& a, const std::vector<double>& b) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : a) lo = std::min(lo, x), hi = std::max(hi, x);
  for (double x : b) lo = std::min(lo, x), hi = std::max(hi, x);
  if (!std::isfinite(lo)) lo = hi = 0.0;
  return {lo, hi};
}

/// Identity plan with knots at every crest of u and v, so refinement can bend it.
inline TransportPlan diagonal_plan(const std::vector<double>& a, const std::vector<double>& b) {
  const auto [lo, hi] = hull(a, b);
  std::vector<double> xs(a);
  xs.insert(xs.end(), b.begin(), b.end());
  xs.push_back(lo - 1.0);
  xs.push_back(hi + 1.0);
  TransportPlan plan;
  for (double x : quadrature::sorted_unique(std::move(xs))) plan.knots.emplace_back(x, x);
  return plan;
}

inline TransportPlan matching_plan(const std::vector<double>& a, const std::vector<double>& b) {
  const auto [lo, hi] = hull(a, b);
  TransportPlan plan;
  plan.knots.emplace_back(lo - 1.0, lo - 1.0);
  for (const auto& pr : match_crests(a, b)) plan.knots.push_back(pr);
  plan.knots.emplace_back(hi + 1.0, hi + 1.0);
  return plan;
}

/// Piece costs of a plan, kept in sync with its knots.
struct CachedPlan {
  TransportPlan plan;
  std::vector<std::pair<double, double>> costs;

  double total() const { return sum(costs).j_value; }
};

inline CachedPlan cache(const Evaluator& ev, TransportPlan plan, unsigned threads) {
  CachedPlan c;
  c.costs = parallel_map(Evaluator::pieces(plan), threads, [&](std::size_t i) { return ev.piece_cost(plan, i); });
  c.plan = std::move(plan);
  return c;
}

/// Moves interior knot k along the anti-diagonal (x + s, y - s) to the best s found by
/// golden-section search. Knots keep x + y, so every monotone curve stays reachable and
/// the search on (v, u) with the inverse plan mirrors this one. Returns the gain.
inline double relax_knot(const Evaluator& ev, CachedPlan& c, std::size_t k) {
  auto& knots = c.plan.knots;
  const auto [x, y] = knots[k];
  const auto [xl, yl] = knots[k - 1];
  const auto [xr, yr] = knots[k + 1];
  // slope >= kMinSlope on both adjacent pieces, with a little room
  const double margin = 1e-7;
  double s_lo = std::max(xl - x, y - yr);
  double s_hi = std::min(xr - x, y - yl);
  const double width = s_hi - s_lo;
  if (!(width > 0.0)) return 0.0;
  s_lo += margin * width;
  s_hi -= margin * width;

  // positions where the piece integrals do not converge count as infinitely costly
  auto local = [&](double s) {
    knots[k] = {x + s, y - s};
    try {
      const auto left = ev.piece_cost(c.plan, k);
      const auto right = ev.piece_cost(c.plan, k + 1);
      return std::tuple{left.first + left.second + right.first + right.second, left, right};
    } catch (const QuadratureFailure&) {
      const double inf = std::numeric_limits<double>::infinity();
      return std::tuple{inf, std::pair{inf, inf}, std::pair{inf, inf}};
    }
  };
  const double current = c.costs[k].first + c.costs[k].second + c.costs[k + 1].first + c.costs[k + 1].second;

  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = s_lo, b = s_hi;
  double p = b - g * (b - a), q = a + g * (b - a);
  double fp = std::get<0>(local(p)), fq = std::get<0>(local(q));
  while (b - a > 1e-6 * width + 1e-12) {
    if (fp <= fq) {
      b = q;
      q = p;
      fq = fp;
      p = b - g * (b - a);
      fp = std::get<0>(local(p));
    } else {
      a = p;
      p = q;
      fp = fq;
      q = a + g * (b - a);
      fq = std::get<0>(local(q));
    }
  }
  const double s = fp <= fq ? p : q;
  auto [best, left, right] = local(s);
  if (best < current) {
    c.costs[k] = left;
    c.costs[k + 1] = right;
    return current - best;
  }
  knots[k] = {x, y};
  return 0.0;
}

/// Adds a knot at the midpoint of the costliest piece; a costly tail instead gains
/// a new end knot one unit further out on the diagonal.
inline void insert_knot(const Evaluator& ev, CachedPlan& c) {
  auto& knots = c.plan.knots;
  std::size_t worst = 0;
  double cost = -1.0;
  for (std::size_t i = 0; i < c.costs.size(); ++i) {
    const double v = c.costs[i].first + c.costs[i].second;
    if (v > cost) cost = v, worst = i;
  }
  if (worst == 0) {
    const double x = knots.front().first - 1.0;
    knots.insert(knots.begin(), {x, x});
  } else if (worst == knots.size()) {
    const double x = knots.back().first + 1.0;
    knots.push_back({x, x});
  } else {
    const auto [x0, y0] = knots[worst - 1];
    const auto [x1, y1] = knots[worst];
    knots.insert(knots.begin() + static_cast<std::ptrdiff_t>(worst), {0.5 * (x0 + x1), 0.5 * (y0 + y1)});
  }
  // piece `worst` became pieces worst and worst + 1
  c.costs.insert(c.costs.begin() + static_cast<std::ptrdiff_t>(worst), {0.0, 0.0});
  c.costs[worst] = ev.piece_cost(c.plan, worst);
  c.costs[worst + 1] = ev.piece_cost(c.plan, worst + 1);
}

}  // namespace metric_detail

/// Upper bound on J(u, v) = inf_psi J^psi(u, v): the best of the identity plan, a
/// crest-matching plan and any extra candidates, refined by knot relaxation and
/// insertion until the budget is spent or a sweep gains less than 1e-6 relative.
inline MinimizeResult minimize_j(const MultipeakonState& u, const MultipeakonState& v,
                                 const MinimizeOptions& options = {}) {
  u.validate();
  v.validate();
  const metric_detail::Evaluator ev(u, v);
  const auto a = ev.u().breakpoints();
  const auto b = ev.v().breakpoints();

  std::vector<TransportPlan> candidates{metric_detail::diagonal_plan(a, b), metric_detail::matching_plan(a, b)};
  for (const auto& plan : options.extra_candidates) {
    try {
      plan.validate();
    } catch (const DomainError&) {
      continue;
    }
    if (plan.knots.size() >= 3) candidates.push_back(plan);
  }
  // extra candidates whose integrals do not converge are dropped
  const auto cached = parallel_map(candidates.size(), options.threads, [&](std::size_t i) {
    try {
      return std::optional(metric_detail::cache(ev, candidates[i], 1));
    } catch (const QuadratureFailure&) {
      if (i < 2) throw;
      return std::optional<metric_detail::CachedPlan>();
    }
  });
  std::size_t best_index = 0;
  for (std::size_t i = 1; i < cached.size(); ++i) {
    if (cached[i] && cached[i]->total() < cached[best_index]->total()) best_index = i;
  }
  metric_detail::CachedPlan best = *cached[best_index];

  MinimizeResult result;
  std::mt19937_64 rng(options.seed);
  double value = best.total();
  for (std::size_t sweep = 0; sweep < options.budget && value > 0.0; ++sweep) {
    std::vector<std::size_t> order;
    for (std::size_t k = 1; k + 1 < best.plan.knots.size(); ++k) order.push_back(k);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k : order) metric_detail::relax_knot(ev, best, k);
    metric_detail::insert_knot(ev, best);
    ++result.sweeps;
    const double next = best.total();
    const bool stalled = value - next < 1e-6 * value;
    value = std::min(value, next);
    if (stalled && sweep > 0) break;
  }
  result.plan = best.plan;
  result.evaluation = metric_detail::sum(best.costs);
  return result;
}

/// ||u - v||_{L^1}.
inline double l1_distance(const MultipeakonState& u, const MultipeakonState& v) {
  const PeakonField fu(u), fv(v);
  auto points = fu.breakpoints();
  const auto vb = fv.breakpoints();
  points.insert(points.end(), vb.begin(), vb.end());
  points = quadrature::with_exponential_tails(quadrature::sorted_unique(std::move(points)), 1.0);
  return quadrature::integrate([&](double x) { return std::abs(fu.u(x) - fv.u(x)); }, points,
                               metric_detail::options());
}

/// ||u - v||_{H^1}.
inline double h1_distance(const MultipeakonState& u, const MultipeakonState& v) {
  const PeakonField fu(u), fv(v);
  auto points = fu.breakpoints();
  const auto vb = fv.breakpoints();
  points.insert(points.end(), vb.begin(), vb.end());
  points = quadrature::with_exponential_tails(quadrature::sorted_unique(std::move(points)), 2.0);
  const double sq = quadrature::integrate(
      [&](double x) {
        const auto [a, ax] = fu.eval(x);
        const auto [b, bx] = fv.eval(x);
        return (a - b) * (a - b) + (ax - bx) * (ax - bx);
      },
      points, {1e-10, 1e-28, 200000});
  return std::sqrt(std::max(sq, 0.0));
}

/// c(u, v) with J^identity(u, v) <= c ||u - v||_{H^1}:
///   sqrt5 (sqrt(l) + ||u_x||_inf sqrt(E^u)) + 6 + sqrt(E^u) + sqrt(E^v)
/// where l is the length of the hull of all crests and ||u_x||_inf <= sum |p_i|.
inline double upper_bound_constant(const MultipeakonState& u, const MultipeakonState& v) {
  const auto [lo, hi] = metric_detail::hull(u.positions(), v.positions());
  double sup_ux = 0.0;
  for (const auto& pk : u.peakons) sup_ux += std::abs(pk.p);
  const double eu = energy_h1(u), evv = energy_h1(v);
  return std::sqrt(5.0) * (std::sqrt(hi - lo) + sup_ux * std::sqrt(eu)) + 6.0 + std::sqrt(eu) + std::sqrt(evv);
}

/// C with ||u - v||_{L^1} <= C J(u, v) checked as an ordering: 2 (E^u + E^v + 3).
inline double lower_bound_constant(const MultipeakonState& u, const MultipeakonState& v) {
  return 2.0 * (energy_h1(u) + energy_h1(v) + 3.0);
}

}  // namespace chpeakon
