#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chpeakon/peakon_field.hpp"
#include "chpeakon/quadrature.hpp"
#include "oracle.hpp"

using namespace chpeakon;

namespace {

MultipeakonState single(double q, double p) { return MultipeakonState{{{q, p}}, 0.0}; }
MultipeakonState pair_state() { return MultipeakonState{{{-1.0, 1.0}, {1.0, -1.0}}, 0.0}; }

}  // namespace

TEST(EvaluateU, Examples) {
  EXPECT_DOUBLE_EQ(evaluate_u(single(0, 1), 0.0), 1.0);
  EXPECT_NEAR(evaluate_u(single(0, 1), 2.0), 0.1353352832366127, 1e-15);
  EXPECT_NEAR(evaluate_u(pair_state(), 0.0), 0.0, 1e-16);
}

TEST(EvaluateUx, Examples) {
  EXPECT_NEAR(evaluate_ux(single(0, 1), 1.0), -0.36787944117144233, 1e-15);
  EXPECT_EQ(evaluate_ux(single(0, 1), 0.0), 0.0);
  EXPECT_NEAR(evaluate_ux(pair_state(), 0.0), -2.0 * std::exp(-1.0), 1e-15);
}

TEST(Hamiltonian, Examples) {
  EXPECT_DOUBLE_EQ(hamiltonian(single(0, 1)), 0.5);
  EXPECT_NEAR(hamiltonian(pair_state()), 1.0 - std::exp(-2.0), 1e-15);
  EXPECT_EQ(hamiltonian(single(0, 0)), 0.0);
}

TEST(PeakonField, MatchesDirectSums) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = oracle::random_state(rng, 1 + trial % 7, -2.0, 2.0, 0.0, 3.0);
    const PeakonField f(s);
    for (double x = -8.0; x <= 8.0; x += 0.173) {
      EXPECT_NEAR(f.u(x), oracle::u(s, x), 1e-13);
      EXPECT_NEAR(f.ux(x), oracle::ux(s, x), 1e-13);
    }
    for (const auto& pk : s.peakons) {
      EXPECT_NEAR(f.u(pk.q), oracle::u(s, pk.q), 1e-13);
      EXPECT_NEAR(f.ux(pk.q), oracle::ux(s, pk.q), 1e-13);
    }
  }
}

TEST(PeakonField, FiniteDifferenceAwayFromCrests) {
  const MultipeakonState s{{{-1.3, 0.7}, {0.2, -1.1}, {2.0, 0.4}}, 0.0};
  for (double x : {-3.0, -0.5, 1.0, 3.7}) {
    double prev = 0.0;
    for (double h : {1e-2, 5e-3}) {
      const double fd = (evaluate_u(s, x + h) - evaluate_u(s, x - h)) / (2 * h);
      const double err = std::abs(fd - evaluate_ux(s, x));
      EXPECT_LT(err, h);
      if (prev > 0.0) {
        EXPECT_LT(err, prev);
      }
      prev = err;
    }
  }
  // at a crest the centred difference stays bounded
  const double fd = (evaluate_u(s, 0.2 + 1e-6) - evaluate_u(s, 0.2 - 1e-6)) / 2e-6;
  EXPECT_LT(std::abs(fd), 5.0);
}

TEST(EnergyH1, Examples) {
  EXPECT_NEAR(energy_h1(single(0, 1)), 2.0, 1e-10);
  EXPECT_EQ(energy_h1(single(0, 0)), 0.0);
  const MultipeakonState far{{{-5, 1}, {5, 1}}, 0.0};
  EXPECT_NEAR(energy_h1(far), 4.0 + 4.0 * std::exp(-10.0), 1e-10);
}

TEST(EnergyH1, EqualsFourHamiltonianAndOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = oracle::random_state(rng, 1 + trial % 6, -2.0, 2.0, 0.05, 3.0);
    const double e = energy_h1(s);
    EXPECT_NEAR(e, oracle::energy(s), 1e-8 * std::abs(oracle::energy(s)) + 1e-14);
    EXPECT_NEAR(e, 4.0 * hamiltonian(s), 1e-8 * std::abs(e) + 1e-14);
    const double brute =
        oracle::integrate([&](double x) { return std::pow(oracle::u(s, x), 2) + std::pow(oracle::ux(s, x), 2); },
                          s.positions());
    EXPECT_NEAR(e, brute, 1e-9 * brute + 1e-14);
  }
}

TEST(ConvolutionP, Examples) {
  EXPECT_NEAR(convolution_P(single(0, 1), 0.0), 0.5, 1e-10);
  EXPECT_EQ(convolution_P(single(0, 0), 1.7), 0.0);
  EXPECT_NEAR(convolution_P(single(0, 2), 0.0), 2.0, 1e-10);
}

TEST(ConvolutionPx, Examples) {
  EXPECT_NEAR(convolution_Px(single(0, 1), 0.0), 0.0, 1e-12);
  EXPECT_LT(std::abs(convolution_Px(single(0, 1), 40.0)), 1e-15);
  const double v = convolution_Px(single(0, 1), 1.0);
  EXPECT_LE(std::abs(v), convolution_P(single(0, 1), 1.0));
  EXPECT_LT(v, 0.0);
}

TEST(Convolution, MatchesOracleAndPxBoundedByP) {
  const MultipeakonState s{{{-2.0, 1.2}, {-0.3, -0.6}, {1.5, 0.9}}, 0.0};
  for (double x = -6.0; x <= 6.0; x += 0.37) {
    auto density = [&](double y) { return std::pow(oracle::u(s, y), 2) + 0.5 * std::pow(oracle::ux(s, y), 2); };
    auto pts = s.positions();
    pts.push_back(x);
    const double p = oracle::integrate([&](double y) { return 0.5 * std::exp(-std::abs(x - y)) * density(y); }, pts);
    const double px = oracle::integrate(
        [&](double y) { return -0.5 * (x > y ? 1.0 : (x < y ? -1.0 : 0.0)) * std::exp(-std::abs(x - y)) * density(y); },
        pts);
    EXPECT_NEAR(convolution_P(s, x), p, 1e-10 * p + 1e-14);
    EXPECT_NEAR(convolution_Px(s, x), px, 1e-10 * p + 1e-14);
    EXPECT_LE(std::abs(convolution_Px(s, x)), convolution_P(s, x) + 1e-9);
  }
}

TEST(KernelWeightIntegral, Examples) {
  EXPECT_NEAR(kernel_weight_integral(0.5, 0.0), 4.0, 1e-12);
  EXPECT_NEAR(kernel_weight_integral(0.0, 0.0), 2.0, 1e-15);
  EXPECT_NEAR(kernel_weight_integral(0.5, 2.0), 4.0 / 3.0 * std::exp(-2.0) + 8.0 / 3.0 * std::exp(1.0), 1e-13);
  EXPECT_NEAR(kernel_weight_integral(0.5, 2.0), 7.42920, 1e-5);
  EXPECT_THROW(kernel_weight_integral(1.0, 0.0), DomainError);
  EXPECT_THROW(kernel_weight_integral(-1.5, 0.0), DomainError);
}

TEST(KernelWeightIntegral, MatchesQuadratureOnGrid) {
  for (double alpha : {-0.7, -0.2, 0.1, 0.5, 0.9}) {
    for (double y : {-3.0, -0.4, 0.0, 2.0, 5.0}) {
      auto f = [&](double x) { return std::exp(alpha * std::abs(x) - std::abs(x - y)); };
      const double tail = 60.0 / (1.0 - std::abs(alpha));
      const double brute = oracle::integrate(f, {0.0, y}, tail);
      EXPECT_NEAR(kernel_weight_integral(alpha, y), brute, 1e-10 * brute) << alpha << ' ' << y;
    }
  }
}

TEST(WeightedDiagnostics, SinglePeakon) {
  const auto d = weighted_diagnostics(single(0, 1), DecayParameters(0.5));
  EXPECT_NEAR(d.weighted_energy, 8.0 / 3.0, 1e-10);
  EXPECT_NEAR(d.energy_h1, 2.0, 1e-10);
  EXPECT_NEAR(d.hamiltonian, 0.5, 1e-15);
  EXPECT_NEAR(d.l1_ux, 2.0, 1e-10);
  EXPECT_NEAR(d.sup_u_squared, 1.0, 1e-15);
  EXPECT_NEAR(d.sup_weighted_u, 1.0, 1e-12);  // e^{-1.5|x|} peaks at the crest
  EXPECT_LE(d.sup_weighted_Px, d.sup_weighted_P);
}

TEST(WeightedDiagnostics, ZeroState) {
  const auto d = weighted_diagnostics(single(0, 0), DecayParameters(0.3));
  EXPECT_EQ(d.hamiltonian, 0.0);
  EXPECT_EQ(d.energy_h1, 0.0);
  EXPECT_EQ(d.weighted_energy, 0.0);
  EXPECT_EQ(d.sup_weighted_u, 0.0);
  EXPECT_EQ(d.l1_ux, 0.0);
  EXPECT_EQ(d.sup_weighted_P, 0.0);
  EXPECT_EQ(d.sup_weighted_Px, 0.0);
}

TEST(WeightedDiagnostics, InequalitiesOnRandomStates) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = oracle::random_state(rng, 1 + trial % 5, -1.5, 1.5);
    for (double alpha : {0.1, 0.5, 0.9}) {
      const auto d = weighted_diagnostics(s, DecayParameters(alpha));
      EXPECT_LE(d.sup_weighted_u, 2.0 * d.weighted_energy + 1e-12);
      EXPECT_LE(d.sup_u_squared, d.energy_h1 + 1e-12);
      EXPECT_LE(d.energy_h1, d.weighted_energy + 1e-12);
      EXPECT_LE(d.sup_weighted_Px, d.sup_weighted_P + 1e-9);
      auto w = [&](double x) {
        return (std::pow(oracle::u(s, x), 2) + std::pow(oracle::ux(s, x), 2)) * std::exp(alpha * std::abs(x));
      };
      auto pts = s.positions();
      pts.push_back(0.0);
      const double brute = oracle::integrate(w, pts, 60.0 / (2.0 - alpha));
      EXPECT_NEAR(d.weighted_energy, brute, 1e-9 * brute);
    }
  }
}

TEST(WeightedDiagnostics, ThreadCountDoesNotChangeValues) {
  const MultipeakonState s{{{-2.0, 1.0}, {0.5, -0.4}, {1.0, 0.8}}, 0.0};
  const auto a = weighted_diagnostics(s, DecayParameters(0.5), 1);
  const auto b = weighted_diagnostics(s, DecayParameters(0.5), 4);
  EXPECT_EQ(a.sup_weighted_P, b.sup_weighted_P);
  EXPECT_EQ(a.sup_weighted_Px, b.sup_weighted_Px);
  EXPECT_EQ(a.sup_weighted_u, b.sup_weighted_u);
}

TEST(DecayParameters, RejectsOutOfRange) {
  EXPECT_THROW(DecayParameters(0.0), DomainError);
  EXPECT_THROW(DecayParameters(1.0), DomainError);
  EXPECT_NO_THROW(DecayParameters(0.5));
}

TEST(SobolevSupCheck, Examples) {
  const auto [lhs, rhs] = sobolev_sup_check(single(0, 1));
  EXPECT_DOUBLE_EQ(lhs, 1.0);
  EXPECT_NEAR(rhs, 2.0, 1e-10);
  const auto [l0, r0] = sobolev_sup_check(single(0, 0));
  EXPECT_EQ(l0, 0.0);
  EXPECT_EQ(r0, 0.0);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const auto [l, r] = sobolev_sup_check(oracle::random_state(rng, 5, -2.0, 2.0));
    EXPECT_LE(l, r);
  }
}

TEST(MultipeakonState, Validation) {
  EXPECT_THROW(MultipeakonState{}.validate(), InvalidState);
  EXPECT_THROW((MultipeakonState{{{1.0, 1.0}, {0.0, 1.0}}, 0.0}).validate(), InvalidState);
  EXPECT_THROW((MultipeakonState{{{0.0, NAN}}, 0.0}).validate(), InvalidState);
  EXPECT_NO_THROW((MultipeakonState{{{0.0, 1.0}, {0.0, -1.0}}, 0.0}).validate());
}

TEST(Quadrature, SmoothAndKinkedIntegrands) {
  const double pts[] = {-1.0, 0.0, 2.0};
  EXPECT_NEAR(quadrature::integrate([](double x) { return std::abs(x); }, pts), 2.5, 1e-13);
  EXPECT_NEAR(quadrature::integrate([](double x) { return std::cos(x); }, 0.0, 10.0), std::sin(10.0), 1e-12);
  EXPECT_NEAR(quadrature::integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0), 2.0 / 3.0, 1e-10);
}
