#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "chpeakon/initial_approximation.hpp"
#include "oracle.hpp"

using namespace chpeakon;

namespace {

SampledFunction zero_profile() {
  SampledFunction f;
  f.f = [](double) { return 0.0; };
  f.fx = [](double) { return 0.0; };
  f.decay_constant = 0.0;
  return f;
}

/// ||f - g||_{H^1} by the oracle quadrature.
template <class F, class Fx, class G, class Gx>
double oracle_h1(F f, Fx fx, G g, Gx gx, std::vector<double> points) {
  const double sq = oracle::integrate_panels(
      [&](double x) {
        const double a = f(x) - g(x), b = fx(x) - gx(x);
        return a * a + b * b;
      },
      std::move(points));
  return std::sqrt(sq);
}

}  // namespace

TEST(Mollifier, NormalizedEvenAndSupported) {
  const double mass = oracle::integrate(mollifier, {-1.0, 0.0, 1.0}, 0.0);
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(mollifier(0.3), mollifier(-0.3));
  EXPECT_EQ(mollifier(1.0), 0.0);
  EXPECT_EQ(mollifier(-1.5), 0.0);
  EXPECT_GT(mollifier(0.99), 0.0);
}

TEST(Mollify, ZeroStaysZero) {
  const auto z = mollify(zero_profile(), 0.1);
  for (double x : {-3.0, 0.0, 0.7}) {
    EXPECT_EQ(z(x), 0.0);
    EXPECT_EQ(z.fx(x), 0.0);
  }
  EXPECT_EQ(mollification_error(zero_profile(), z), 0.0);
  EXPECT_THROW(mollify(zero_profile(), 0.0), DomainError);
}

TEST(Mollify, ConvolutionMatchesOracle) {
  const auto f = profiles::peakon(0.5);
  const double eps = 0.2;
  const auto ft = mollify(f, eps);
  for (double x : {-1.0, -0.1, 0.0, 0.05, 0.5, 2.0}) {
    const double ref = oracle::integrate(
        [&](double y) { return mollifier((x - y) / eps) / eps * std::exp(-std::abs(y)); },
        {x - eps, 0.0, x + eps}, 0.0);
    EXPECT_NEAR(ft(x), ref, 1e-11) << x;
    const double h = 1e-5;
    EXPECT_NEAR(ft.fx(x), (ft(x + h) - ft(x - h)) / (2 * h), 1e-8) << x;
  }
}

TEST(Mollify, PreservesIntegral) {
  const auto f = profiles::peakon(0.5);
  const auto ft = mollify(f, 0.1);
  const double mass = oracle::integrate(ft.f, {-0.1, 0.0, 0.1});
  EXPECT_NEAR(mass, 2.0, 1e-10);
}

TEST(Mollify, KinkedProfileConvergesAtRateOneHalf) {
  // ||f - rho_eps * f||_{H^1} for e^{-|x|} is dominated by the slope jump, ~ eps^{1/2}
  const auto f = profiles::peakon(0.5);
  std::vector<double> errs;
  for (double eps : {0.1, 0.05, 0.025}) {
    const auto ft = mollify(f, eps);
    const double err = mollification_error(f, ft);
    const double ref = oracle_h1(f.f, f.fx, ft.f, ft.fx, {-eps, 0.0, eps});
    EXPECT_NEAR(err, ref, 1e-6 * ref);
    errs.push_back(err);
  }
  for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
    const double rate = std::log2(errs[k] / errs[k + 1]);
    EXPECT_GT(rate, 0.45);
    EXPECT_LT(rate, 0.55);
  }
}

TEST(Mollify, SmoothProfileConvergesFaster) {
  const auto f = profiles::gaussian(0.5);
  const double e1 = mollification_error(f, mollify(f, 0.1));
  const double e2 = mollification_error(f, mollify(f, 0.05));
  EXPECT_GT(std::log2(e1 / e2), 1.8);
}

TEST(ChooseRadius, PeakonTailIsLogarithmic) {
  // tail H^1 norm of e^{-|x|} beyond R is sqrt(2) e^{-R}
  const auto f = profiles::peakon(0.5);
  EXPECT_NEAR(tail_norm(f, 1.5), std::sqrt(2.0) * std::exp(-1.5), 1e-10);
  double prev = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const double R = choose_radius(f, eps);
    const double exact = std::log(2.0 * std::sqrt(2.0) / eps);
    EXPECT_GE(R, exact);
    EXPECT_LE(R, exact * 1.011);
    EXPECT_GT(R, prev);
    prev = R;
  }
  EXPECT_THROW(choose_radius(f, -1.0), DomainError);
}

TEST(ChooseRadius, CompactSupportCapsRadius) {
  const auto f = mollify(profiles::bump(0.5), 0.05);
  EXPECT_LE(choose_radius(f, 1e-3), 1.05);
  EXPECT_LE(choose_radius(f, 1e-6), 1.05);
}

TEST(Peakonize, ZeroGivesZeroStrengths) {
  const auto g = peakonize(zero_profile(), 2.0, 4);
  ASSERT_EQ(g.size(), 9u);
  for (const auto& pk : g.peakons) EXPECT_EQ(pk.p, 0.0);
  EXPECT_NEAR(g.peakons.front().q, -2.0, 1e-15);
  EXPECT_NEAR(g.peakons.back().q, 2.0, 1e-15);
  EXPECT_THROW(peakonize(zero_profile(), 2.0, 0), DomainError);
}

TEST(Peakonize, StrengthsSumToHalfTheMass) {
  const auto ft = mollify(profiles::gaussian(0.5), 0.05);
  const double mass = oracle::integrate(ft.f, {0.0});
  for (std::size_t N : {4u, 16u, 64u}) {
    const auto g = peakonize(ft, 3.0, N);
    double sum = 0.0;
    for (const auto& pk : g.peakons) sum += pk.p;
    EXPECT_NEAR(sum, 0.5 * mass, 1e-9);
  }
}

TEST(Peakonize, IsLinear) {
  const auto a = mollify(profiles::gaussian(0.5), 0.05);
  const auto b = mollify(profiles::peakon(0.5), 0.05);
  SampledFunction c = b;
  c.f = [a, b](double x) { return 2.0 * a(x) - b(x); };
  c.fx = [a, b](double x) { return 2.0 * a.fx(x) - b.fx(x); };
  const auto ga = peakonize(a, 3.0, 16), gb = peakonize(b, 3.0, 16), gc = peakonize(c, 3.0, 16);
  for (std::size_t i = 0; i < gc.size(); ++i) {
    EXPECT_NEAR(gc.peakons[i].p, 2.0 * ga.peakons[i].p - gb.peakons[i].p, 1e-10);
  }
}

TEST(Peakonize, ErrorDecreasesWithN) {
  const auto f = profiles::gaussian(0.5);
  const auto ft = mollify(f, 0.01);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t N : {8u, 32u, 128u}) {
    const auto g = peakonize(ft, 6.0, N);
    const double err = h1_error(f, g);
    const double ref = oracle_h1(
        f.f, f.fx, [&](double x) { return oracle::u(g, x); }, [&](double x) { return oracle::ux(g, x); },
        [&] {
          std::vector<double> pts;
          for (const auto& pk : g.peakons) pts.push_back(pk.q);
          return pts;
        }());
    EXPECT_NEAR(err, ref, 1e-6 * ref + 1e-12);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Peakonize, ThreadCountDoesNotChangeResult) {
  const auto ft = mollify(profiles::gaussian(0.5), 0.05);
  const auto g1 = peakonize(ft, 3.0, 32, 1);
  const auto g8 = peakonize(ft, 3.0, 32, 8);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1.peakons[i].p, g8.peakons[i].p);
}

TEST(ApproximateToTolerance, GaussianSweepHasBoundedWeightedEnergy) {
  const auto f = profiles::gaussian(0.5);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const auto r = approximate_to_tolerance(f, eps);
    EXPECT_LT(r.h1_error, eps);
    EXPECT_NEAR(r.weighted_energy_g, weighted_energy(r.g, 0.5), 1e-12 * r.weighted_energy_g);
    lo = std::min(lo, r.weighted_energy_g);
    hi = std::max(hi, r.weighted_energy_g);
  }
  EXPECT_LE(hi / lo, 2.0);
}

TEST(ApproximateToTolerance, KinkedPeakonProfile) {
  const auto r = approximate_to_tolerance(profiles::peakon(0.5), 1e-2);
  EXPECT_LT(r.h1_error, 1e-2);
  EXPECT_GE(r.N, 8u);
}

TEST(ApproximateToTolerance, BudgetIsEnforced) {
  EXPECT_THROW(approximate_to_tolerance(profiles::gaussian(0.5), 1e-3, 1, 8), BudgetExceeded);
  EXPECT_THROW(approximate_to_tolerance(profiles::gaussian(0.5), 0.0), DomainError);
}

TEST(Profiles, ByNameAndDecayConstants) {
  EXPECT_EQ(profiles::by_name("peakon", 0.5).decay_constant, 1.0);
  // max of |f_x| e^{|x|/4} for e^{-x^2}, attained near x = 0.77
  const double c = profiles::gaussian(0.5).decay_constant;
  EXPECT_GT(c, 1.0);
  EXPECT_LT(c, 1.04);
  EXPECT_EQ(profiles::bump(0.5)(1.2), 0.0);
  EXPECT_THROW(profiles::by_name("sech", 0.5), ConfigError);
}

TEST(Tabulated, HermiteInterpolantAndTail) {
  std::vector<double> xs, fs, ds;
  for (int k = -30; k <= 30; ++k) {
    const double x = 0.1 * k;
    xs.push_back(x);
    fs.push_back(std::exp(-x * x));
    ds.push_back(-2 * x * std::exp(-x * x));
  }
  const auto f = tabulated(xs, fs, ds, 0.5, 2.0);
  for (double x : {-2.95, -0.33, 0.0, 1.234}) {
    EXPECT_NEAR(f(x), std::exp(-x * x), 1e-5);
    EXPECT_NEAR(f.fx(x), -2 * x * std::exp(-x * x), 1e-3);
  }
  EXPECT_NEAR(f(4.0), std::exp(-9.0) * std::exp(-2.0), 1e-15);
  EXPECT_THROW(tabulated({0.0}, {1.0}, {0.0}, 0.5), ConfigError);
  EXPECT_THROW(tabulated({0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, 0.5), ConfigError);
}

TEST(Tabulated, LoadsCsv) {
  const std::string path = testing::TempDir() + "profile.csv";
  {
    std::ofstream out(path);
    out << "x,f,f_x\n-1,0.5,0.5\n0,1,0\n1,0.5,-0.5\n";
  }
  const auto f = load_tabulated_csv(path, 0.5);
  EXPECT_DOUBLE_EQ(f(0.0), 1.0);
  EXPECT_DOUBLE_EQ(f(1.0), 0.5);
  {
    std::ofstream out(path);
    out << "x,f,f_x\n0,1,0\n1,oops\n";
  }
  EXPECT_THROW(load_tabulated_csv(path, 0.5), ConfigError);
  std::remove(path.c_str());
  EXPECT_THROW(load_tabulated_csv(path, 0.5), ConfigError);
}
