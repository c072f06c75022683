#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "chpeakon/errors.hpp"
#include "chpeakon/parallel.hpp"
#include "chpeakon/peakon_field.hpp"
#include "chpeakon/quadrature.hpp"

namespace chpeakon {

/// A function in the exponentially decaying class, given by evaluators for f and f_x.
struct SampledFunction {
  std::function<double(double)> f;
  std::function<double(double)> fx;
  DecayParameters decay{0.5};
  double decay_constant = 1.0;  ///< C with |f|, |f_x| <= C e^{-(alpha/2)|x|}
  std::vector<double> breakpoints;  ///< points where f_x may jump or f is not smooth
  double support_radius = std::numeric_limits<double>::infinity();  ///< f = 0 for |x| > support_radius
  double mollifier_width = 0.0;  ///< width of the mollifier already applied, 0 if none

  double operator()(double x) const { return f(x); }

  /// f_x(x+), the right limit of the derivative.
  double fx_right(double x) const {
    if (std::binary_search(breakpoints.begin(), breakpoints.end(), x)) {
      return fx(std::nextafter(x, std::numeric_limits<double>::infinity()));
    }
    return fx(x);
  }
};

namespace approx_detail {

/// Squared H^1 differences are rounding noise below ~1e-24, so that is the absolute floor.
inline quadrature::Options options() { return {1e-10, 1e-24, 400000}; }

/// Partition of [lo, hi] (possibly infinite ends) refined at f's breakpoints;
/// infinite ends are replaced by tails long enough for f^2 to decay by ~1e-17.
inline std::vector<double> partition(const SampledFunction& f, std::vector<double> extra,
                                     double lo = -std::numeric_limits<double>::infinity(),
                                     double hi = std::numeric_limits<double>::infinity()) {
  const double support = f.support_radius;
  lo = std::max(lo, -support);
  hi = std::min(hi, support);
  std::vector<double> points;
  for (double b : f.breakpoints) {
    if (b > lo && b < hi) points.push_back(b);
  }
  for (double b : extra) {
    if (b > lo && b < hi) points.push_back(b);
  }
  if (std::isfinite(lo)) points.push_back(lo);
  if (std::isfinite(hi)) points.push_back(hi);
  points = quadrature::sorted_unique(std::move(points));
  if (std::isfinite(lo) && std::isfinite(hi)) return points;
  auto tailed = quadrature::with_exponential_tails(points, f.decay.alpha());
  std::vector<double> out;
  for (double x : tailed) {
    if (x >= lo && x <= hi) out.push_back(x);
  }
  return out;
}

/// Smooth even bump on (-1, 1), unnormalized.
inline double bump(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

inline double bump_mass() {
  static const double mass = quadrature::integrate(bump, -1.0, 1.0, {1e-13, 1e-300, 10000});
  return mass;
}

/// int_a^b w(t) g(t) dt on 8 equal panels of 20-point Gauss-Legendre. A fixed rule
/// keeps the mollified function smooth in x, which adaptive inner quadrature would not.
template <class W, class G>
double fixed_rule(W&& w, G&& g, double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  constexpr int kPanels = 8;
  const double h = (b - a) / kPanels;
  double sum = 0.0;
  for (int i = 0; i < kPanels; ++i) {
    sum += Rule::integrate([&](double t) { return w(t) * g(t); }, a + i * h, a + (i + 1) * h);
  }
  return sum;
}

}  // namespace approx_detail

/// Normalized mollifier rho(t) = bump(t) / int bump, supported in [-1, 1].
inline double mollifier(double t) { return approx_detail::bump(t) / approx_detail::bump_mass(); }

/// ||f - g||_{H^1} for two evaluators with their breakpoints.
template <class F, class Fx, class G, class Gx>
double h1_distance(const SampledFunction& shape, F&& f, Fx&& fx, G&& g, Gx&& gx, std::vector<double> breakpoints) {
  const auto points = approx_detail::partition(shape, std::move(breakpoints));
  const double sq = quadrature::integrate(
      [&](double x) {
        const double a = f(x) - g(x);
        const double b = fx(x) - gx(x);
        return a * a + b * b;
      },
      points, approx_detail::options());
  return std::sqrt(std::max(sq, 0.0));
}

/// ||f - g||_{H^1} for a multipeakon g.
inline double h1_error(const SampledFunction& f, const MultipeakonState& g) {
  const PeakonField field(g);
  // g is never compactly supported, so integrate over the whole line
  SampledFunction shape = f;
  shape.support_radius = std::numeric_limits<double>::infinity();
  return h1_distance(shape, f.f, f.fx, [&](double x) { return field.u(x); }, [&](double x) { return field.ux(x); },
                     field.breakpoints());
}

/// H^1 norm of f restricted to |x| > R.
inline double tail_norm(const SampledFunction& f, double R) {
  auto density = [&](double x) {
    const double a = f.f(x);
    const double b = f.fx(x);
    return a * a + b * b;
  };
  const auto inf = std::numeric_limits<double>::infinity();
  const auto right = approx_detail::partition(f, {}, R, inf);
  const auto left = approx_detail::partition(f, {}, -inf, -R);
  const double sq = quadrature::integrate(density, right, approx_detail::options()) +
                    quadrature::integrate(density, left, approx_detail::options());
  return std::sqrt(std::max(sq, 0.0));
}

/// f~ = rho_eps * f, with f~ and f~_x evaluated by quadrature of the convolution.
inline SampledFunction mollify(const SampledFunction& f, double eps) {
  if (!(eps > 0.0)) throw DomainError("mollify needs eps > 0");
  auto src = std::make_shared<const SampledFunction>(f);
  // f~(x) = int_{-1}^{1} rho(t) f(x - eps t) dt; breakpoints of f map to t = (x - b) / eps.
  auto convolve = [src, eps](bool derivative) {
    return [src, eps, derivative](double x) {
      std::vector<double> points{-1.0, 1.0};
      for (double b : src->breakpoints) {
        const double t = (x - b) / eps;
        if (t > -1.0 && t < 1.0) points.push_back(t);
      }
      points = quadrature::sorted_unique(std::move(points));
      const auto& g = derivative ? src->fx : src->f;
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        sum += approx_detail::fixed_rule(mollifier, [&](double t) { return g(x - eps * t); }, points[k], points[k + 1]);
      }
      return sum;
    };
  };
  SampledFunction out;
  out.f = convolve(false);
  out.fx = convolve(true);
  out.decay = f.decay;
  out.decay_constant = f.decay_constant * std::exp(0.5 * f.decay.alpha() * eps);
  for (double b : f.breakpoints) {
    out.breakpoints.push_back(b - eps);
    out.breakpoints.push_back(b);
    out.breakpoints.push_back(b + eps);
  }
  out.breakpoints = quadrature::sorted_unique(std::move(out.breakpoints));
  out.support_radius = f.support_radius + eps;
  out.mollifier_width = eps;
  return out;
}

/// ||f - rho_eps * f||_{H^1}.
inline double mollification_error(const SampledFunction& f, const SampledFunction& f_tilde) {
  auto points = f_tilde.breakpoints;
  const SampledFunction& wider = f_tilde.support_radius >= f.support_radius ? f_tilde : f;
  return h1_distance(wider, f.f, f.fx, f_tilde.f, f_tilde.fx, std::move(points));
}

/// Smallest radius R (doubling, then bisection to 1%) with ||f~||_{H^1(|x|>R)} < eps / 2.
inline double choose_radius(const SampledFunction& f_tilde, double eps) {
  if (!(eps > 0.0)) throw DomainError("choose_radius needs eps > 0");
  const double target = 0.5 * eps;
  double hi = 0.25;
  while (tail_norm(f_tilde, hi) >= target) {
    hi *= 2.0;
    if (hi > 1e6) throw BudgetExceeded("no radius below 1e6 reaches the requested tail norm");
  }
  double lo = hi * 0.5;
  if (hi == 0.25) lo = 0.0;
  while (hi - lo > 0.01 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (tail_norm(f_tilde, mid) < target) hi = mid;
    else lo = mid;
  }
  return hi;
}

/// Multipeakon with crests q_i = i R / N (i = -N..N) and
/// p_i = 1/2 [int_{q_{i-1}}^{q_i} f~ + f~_x(q_{i-1}+) - f~_x(q_i+)].
///
/// The outermost cells are (-inf, -R] and [q_{N-1}, +inf), so the mass of f~ - f~_xx
/// beyond +-R is lumped onto the end crests instead of dropped and
/// sum p_i = 1/2 int f~ holds exactly.
inline MultipeakonState peakonize(const SampledFunction& f_tilde, double R, std::size_t N, unsigned threads = 1) {
  if (N < 1 || !(R > 0.0)) throw DomainError("peakonize needs N >= 1 and R > 0");
  const auto n = static_cast<long long>(N);
  const double h = R / static_cast<double>(N);
  const double inf = std::numeric_limits<double>::infinity();
  auto crest = [&](long long i) { return i == n ? R : (i == -n ? -R : static_cast<double>(i) * h); };
  auto slope = [&](double x) { return std::isfinite(x) ? f_tilde.fx_right(x) : 0.0; };
  const auto cells = parallel_map(static_cast<std::size_t>(2 * n + 1), threads, [&](std::size_t k) {
    const long long i = static_cast<long long>(k) - n;
    const double a = (i == -n) ? -inf : crest(i - 1);
    const double b = (i == n) ? inf : crest(i);
    const auto points = approx_detail::partition(f_tilde, {}, a, b);
    const double mass = quadrature::integrate(f_tilde.f, points, approx_detail::options());
    return Peakon{crest(i), 0.5 * (mass + slope(a) - slope(b))};
  });
  MultipeakonState g;
  g.peakons.assign(cells.begin(), cells.end());
  return g;
}

struct PeakonizationReport {
  MultipeakonState g;
  double h1_error = 0.0;
  double weighted_energy_g = 0.0;
  double R_eps = 0.0;
  std::size_t N = 0;
  double mollifier_width = 0.0;  ///< 0 when f was used unmollified
};

/// mollify -> choose_radius -> peakonize with N doubling until ||f - g||_{H^1} < eps.
///
/// The mollifier width starts at eps and shrinks by 4 while ||f - f~||_{H^1} >= eps/4.
/// If four widths fail (f has kinks, where the rate is only width^{1/2}), f itself is
/// used: its declared breakpoints already make every quadrature piecewise smooth.
inline PeakonizationReport approximate_to_tolerance(const SampledFunction& f, double eps, unsigned threads = 1,
                                                   std::size_t max_n = std::size_t{1} << 20) {
  if (!(eps > 0.0)) throw DomainError("approximate_to_tolerance needs eps > 0");
  SampledFunction f_tilde = f;
  double width = eps;
  for (int attempt = 0; attempt < 4; ++attempt, width *= 0.25) {
    auto candidate = mollify(f, width);
    if (mollification_error(f, candidate) < 0.25 * eps) {
      f_tilde = std::move(candidate);
      break;
    }
  }
  PeakonizationReport report;
  report.mollifier_width = f_tilde.mollifier_width;
  report.R_eps = choose_radius(f_tilde, 0.5 * eps);
  for (std::size_t N = 8;; N *= 2) {
    if (N > max_n) {
      throw BudgetExceeded("no N <= " + std::to_string(max_n) + " reaches H1 error " + std::to_string(eps));
    }
    auto g = peakonize(f_tilde, report.R_eps, N, threads);
    const double err = h1_error(f, g);
    if (err < eps) {
      report.g = std::move(g);
      report.h1_error = err;
      report.N = N;
      break;
    }
  }
  report.weighted_energy_g = weighted_energy(report.g, f.decay.alpha());
  return report;
}

/// max over a grid of max(|f|, |f_x|) e^{(alpha/2)|x|}.
inline double estimate_decay_constant(const SampledFunction& f, double half_width = 40.0, int points = 4001) {
  const double a = 0.5 * f.decay.alpha();
  double c = 0.0;
  for (int k = 0; k < points; ++k) {
    const double x = -half_width + 2.0 * half_width * k / (points - 1);
    const double w = std::exp(a * std::abs(x));
    c = std::max({c, std::abs(f.f(x)) * w, std::abs(f.fx(x)) * w});
  }
  return c;
}

namespace profiles {

/// e^{-|x|}.
inline SampledFunction peakon(double alpha) {
  SampledFunction f;
  f.f = [](double x) { return std::exp(-std::abs(x)); };
  f.fx = [](double x) { return -sign0(x) * std::exp(-std::abs(x)); };
  f.decay = DecayParameters(alpha);
  f.decay_constant = 1.0;
  f.breakpoints = {0.0};
  return f;
}

/// e^{-x^2}.
inline SampledFunction gaussian(double alpha) {
  SampledFunction f;
  f.f = [](double x) { return std::exp(-x * x); };
  f.fx = [](double x) { return -2.0 * x * std::exp(-x * x); };
  f.decay = DecayParameters(alpha);
  f.decay_constant = estimate_decay_constant(f);
  return f;
}

/// Smooth compactly supported bump e^{1 - 1/(1 - x^2)} on (-1, 1).
inline SampledFunction bump(double alpha) {
  SampledFunction f;
  f.f = [](double x) { return std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0; };
  f.fx = [](double x) {
    if (!(std::abs(x) < 1.0)) return 0.0;
    const double s = 1.0 - x * x;
    return -2.0 * x / (s * s) * std::exp(1.0 - 1.0 / s);
  };
  f.decay = DecayParameters(alpha);
  f.support_radius = 1.0;
  f.breakpoints = {-1.0, 1.0};
  f.decay_constant = estimate_decay_constant(f, 2.0);
  return f;
}

inline SampledFunction by_name(const std::string& name, double alpha) {
  if (name == "peakon") return peakon(alpha);
  if (name == "gaussian") return gaussian(alpha);
  if (name == "bump") return bump(alpha);
  throw ConfigError("unknown profile '" + name + "' (expected peakon, gaussian or bump)");
}

}  // namespace profiles

/// Cubic Hermite interpolant of tabulated (x, f, f_x) rows, continued outside the
/// table by f(end) e^{-rate |x - end|}.
inline SampledFunction tabulated(std::vector<double> xs, std::vector<double> fs, std::vector<double> dfs,
                                 double alpha, double rate = 1.0) {
  if (xs.size() < 2 || fs.size() != xs.size() || dfs.size() != xs.size()) {
    throw ConfigError("tabulated profile needs at least two rows of (x, f, f_x)");
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (!(xs[i + 1] > xs[i])) throw ConfigError("tabulated x values must be strictly increasing");
  }
  if (!(rate > 0.0)) throw ConfigError("extrapolation rate must be positive");
  struct Table {
    std::vector<double> x, f, d;
    double rate;
  };
  auto t = std::make_shared<const Table>(Table{std::move(xs), std::move(fs), std::move(dfs), rate});
  // Hermite basis on [x_k, x_{k+1}] with s in [0, 1].
  auto eval = [t](double x, bool derivative) {
    const auto& X = t->x;
    if (x <= X.front()) {
      const double e = t->f.front() * std::exp(-t->rate * (X.front() - x));
      return derivative ? t->rate * e : e;
    }
    if (x >= X.back()) {
      const double e = t->f.back() * std::exp(-t->rate * (x - X.back()));
      return derivative ? -t->rate * e : e;
    }
    const std::size_t k =
        static_cast<std::size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin()) - 1;
    const double h = X[k + 1] - X[k];
    const double s = (x - X[k]) / h;
    const double f0 = t->f[k], f1 = t->f[k + 1], m0 = t->d[k] * h, m1 = t->d[k + 1] * h;
    if (!derivative) {
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * f1 + (s3 - s2) * m1;
    }
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) * f0 + (3 * s2 - 4 * s + 1) * m0 + (-6 * s2 + 6 * s) * f1 + (3 * s2 - 2 * s) * m1) / h;
  };
  SampledFunction f;
  f.f = [eval](double x) { return eval(x, false); };
  f.fx = [eval](double x) { return eval(x, true); };
  f.decay = DecayParameters(alpha);
  f.breakpoints = t->x;
  f.decay_constant = estimate_decay_constant(f, std::max(std::abs(t->x.front()), std::abs(t->x.back())) + 20.0);
  return f;
}

/// Reads "x,f,f_x" rows (an optional non-numeric header line is skipped).
inline SampledFunction load_tabulated_csv(const std::string& path, double alpha, double rate = 1.0) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile table '" + path + "'");
  std::vector<double> xs, fs, dfs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x, f, d;
    if (!(row >> x >> f >> d)) {
      if (lineno == 1) continue;
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected three numbers");
    }
    xs.push_back(x);
    fs.push_back(f);
    dfs.push_back(d);
  }
  return tabulated(std::move(xs), std::move(fs), std::move(dfs), alpha, rate);
}

}  // namespace chpeakon
