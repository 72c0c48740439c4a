#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "abmhedge/errors.hpp"
#include "abmhedge/rng.hpp"

using namespace abmhedge;

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  using C = std::array<std::uint32_t, 4>;
  using K = std::array<std::uint32_t, 2>;
  EXPECT_EQ(philox4x32(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       K{0xffffffffu, 0xffffffffu}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       K{0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(CounterRng, StepsAreAddressable) {
  const CounterRng a(11, 3);
  const CounterRng b(11, 3);
  const auto late = a.draws(500);
  for (std::uint64_t s = 0; s < 500; ++s) (void)b.draws(s);
  const auto again = b.draws(500);
  EXPECT_EQ(late.eps_s, again.eps_s);
  EXPECT_EQ(late.z, again.z);
  EXPECT_EQ(late.eta, again.eta);
}

TEST(CounterRng, StreamsDifferAcrossPathsStepsAndSeeds) {
  std::set<double> seen;
  for (std::uint64_t seed : {1u, 2u}) {
    for (std::uint64_t path : {0u, 1u, 7u}) {
      for (std::uint64_t step : {0u, 1u, 2u}) {
        seen.insert(CounterRng(seed, path).draws(step).eps_s);
      }
    }
  }
  EXPECT_EQ(seen.size(), 18u);
}

TEST(CounterRng, UniformsInUnitInterval) {
  const CounterRng rng(5, 0);
  for (std::uint64_t s = 0; s < 10000; ++s) {
    for (double u : rng.uniforms(s, 0)) {
      ASSERT_GT(u, 0.0);
      ASSERT_LE(u, 1.0);
    }
  }
}

TEST(CounterRng, DrawsAreStandardNormal) {
  const CounterRng rng(2024, 0);
  const int n = 200000;
  double sum[3] = {}, sq[3] = {};
  for (int s = 0; s < n; ++s) {
    const auto d = rng.draws(static_cast<std::uint64_t>(s));
    const double v[3] = {d.eps_s, d.z, d.eta};
    for (int k = 0; k < 3; ++k) {
      sum[k] += v[k];
      sq[k] += v[k] * v[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / n;
    const double var = sq[k] / n - mean * mean;
    EXPECT_LT(std::abs(mean), 4.0 / std::sqrt(n));
    // var of the sample variance of N(0,1) is 2/n
    EXPECT_LT(std::abs(var - 1.0), 4.0 * std::sqrt(2.0 / n));
  }
}

TEST(CorrelatedPair, PerfectCorrelationCopiesPriceNoise) {
  const auto p = correlated_normal_pair(1.0, 0.7, -1.3);
  EXPECT_EQ(p[0], 0.7);
  EXPECT_EQ(p[1], 0.7);
  const auto q = correlated_normal_pair(-1.0, 0.7, -1.3);
  EXPECT_EQ(q[1], -0.7);
}

TEST(CorrelatedPair, RejectsOutOfRangeRho) {
  EXPECT_THROW(correlated_normal_pair(1.0001, 0.1, 0.2), ParameterError);
  EXPECT_THROW(correlated_normal_pair(-2.0, 0.1, 0.2), ParameterError);
  EXPECT_THROW(correlated_normal_pair(std::nan(""), 0.1, 0.2), ParameterError);
}

class CorrelatedPairMc : public ::testing::TestWithParam<double> {};

TEST_P(CorrelatedPairMc, SampleCorrelationMatchesRho) {
  const double rho = GetParam();
  const CounterRng rng(99, 4);
  const int n = 100000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const auto [x, y] = correlated_normal_pair(rho, rng, static_cast<std::uint64_t>(i));
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double corr = cov / std::sqrt(vx * vy);
  EXPECT_NEAR(corr, rho, 0.02);
  EXPECT_NEAR(corr, rho, 3.0 / std::sqrt(n) + 1e-3);
  EXPECT_NEAR(vy, 1.0, 0.02);
}

INSTANTIATE_TEST_SUITE_P(Rhos, CorrelatedPairMc, ::testing::Values(0.0, -0.5, 0.8));

TEST(DeriveSeed, DependsOnPurposeAndSeed) {
  EXPECT_EQ(derive_seed(7, "simulate"), derive_seed(7, "simulate"));
  EXPECT_NE(derive_seed(7, "simulate"), derive_seed(7, "calibrate"));
  EXPECT_NE(derive_seed(7, "simulate"), derive_seed(8, "simulate"));
}

TEST(Fnv1a, ReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}
