#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>

#include "divbound/oracle.hpp"
#include "divbound/specfun.hpp"
#include "test_util.hpp"

namespace o = divbound::oracle;

namespace {

// TV(N(0,1), N(0,4)): densities cross at x* = sqrt(8 ln 2 / 3).
double gaussian_tv_1_4() {
  const double xs = std::sqrt(8.0 * std::log(2.0) / 3.0);
  return 2.0 * (divbound::specfun::normal_cdf(xs) - divbound::specfun::normal_cdf(xs / 2.0));
}

o::McConfig config(std::uint64_t samples, std::uint64_t seed, unsigned threads = 0) {
  o::McConfig cfg;
  cfg.samples = samples;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST(Oracle, GaussianReferenceValue) {
  EXPECT_NEAR(gaussian_tv_1_4(), 0.32267456883476866475, 1e-14);  // mpmath
}

TEST(Oracle, TvAgainstClosedForm) {
  const o::DiagNormalLaw a({1.0}), b({4.0});
  const auto r = o::mc_tv(a, b, config(1'000'000, 42));
  EXPECT_EQ(r.samples_used, 1'000'000u);
  EXPECT_LT(std::abs(r.estimate - gaussian_tv_1_4()), 3.0 * r.std_error);
}

TEST(Oracle, KlAgainstClosedForm) {
  const o::DiagNormalLaw a({1.0}), b({4.0});
  const double exact = 0.5 * (0.25 - 1.0 + std::log(4.0));
  const auto r = o::mc_kl(a, b, config(1'000'000, 43));
  EXPECT_LT(std::abs(r.estimate - exact), 3.0 * r.std_error);
  EXPECT_GT(r.std_error, 0.0);
}

TEST(Oracle, IdenticalLawsGiveZeroWithinNoise) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 5;
    const o::DiagNormalLaw p(divbound::testing::uniform_vector(rng, static_cast<int>(n), 0.5, 2.0));
    const o::StudentLaw t(u(rng) * 3.0, n);
    const auto r = (trial % 2) ? o::mc_tv(p, p, config(20'000, trial)) : o::mc_tv(t, t, config(20'000, trial));
    EXPECT_LE(std::abs(r.estimate), 3.0 * r.std_error + 1e-12) << trial;
  }
  const o::DiagNormalLaw p({1.0, 2.0});
  const auto kl = o::mc_kl(p, p, config(1000, 1));
  EXPECT_EQ(kl.estimate, 0.0);
}

TEST(Oracle, BitReproducibleAcrossThreadCounts) {
  const o::StudentLaw t(3.0, 4);
  const o::DiagNormalLaw g(std::vector<double>(4, 1.0));
  const auto one = o::mc_tv(t, g, config(200'000, 42, 1));
  const auto four = o::mc_tv(t, g, config(200'000, 42, 4));
  const auto again = o::mc_tv(t, g, config(200'000, 42, 3));
  EXPECT_EQ(one.estimate, four.estimate);
  EXPECT_EQ(one.std_error, four.std_error);
  EXPECT_EQ(one.estimate, again.estimate);
  const auto k1 = o::mc_kl(t, g, config(100'000, 7, 1));
  const auto k4 = o::mc_kl(t, g, config(100'000, 7, 4));
  EXPECT_EQ(k1.estimate, k4.estimate);
  EXPECT_EQ(k1.std_error, k4.std_error);
  const auto other = o::mc_tv(t, g, config(200'000, 43, 1));
  EXPECT_NE(one.estimate, other.estimate);
}

TEST(Samplers, StudentMarginalVariance) {
  const o::StudentLaw t(5.0, 1);
  const std::uint64_t n = 10'000'000;
  // X^2 has finite variance for nu = 5, so the sample SE is meaningful.
  const auto r = o::mc_kl(
      1, [&](o::Engine& e, std::span<double> x) { t.sample(e, x); },
      [](std::span<const double> x) { return x[0] * x[0]; }, [](std::span<const double>) { return 0.0; },
      config(n, 5));
  EXPECT_LT(std::abs(r.estimate - 5.0 / 3.0), 4.0 * r.std_error);
}

TEST(Samplers, DiagNormalVariancesAndGammaMeans) {
  const o::DiagNormalLaw g({0.5, 2.0, 7.0});
  const o::GammaProductLaw gam({0.7, 3.0}, {2.0, 0.5});
  const std::uint64_t n = 2'000'000;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = o::mc_kl(
        3, [&](o::Engine& e, std::span<double> x) { g.sample(e, x); },
        [i](std::span<const double> x) { return x[i] * x[i]; }, [](std::span<const double>) { return 0.0; },
        config(n, 100 + i));
    EXPECT_LT(std::abs(r.estimate - g.variances()[i]), 4.0 * r.std_error) << i;
  }
  const double means[2] = {0.7 / 2.0, 3.0 / 0.5};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto r = o::mc_kl(
        2, [&](o::Engine& e, std::span<double> x) { gam.sample(e, x); }, [i](std::span<const double> x) { return x[i]; },
        [](std::span<const double>) { return 0.0; }, config(n, 200 + i));
    EXPECT_LT(std::abs(r.estimate - means[i]), 4.0 * r.std_error) << i;
  }
}

TEST(Samplers, LogDensitiesNormalize) {
  // 1-D densities integrate to one.
  const o::StudentLaw t(2.5, 1);
  const o::DiagNormalLaw g({3.0});
  const o::GammaProductLaw gam({2.5}, {1.5});
  auto f = [](const auto& law) {
    return [&law](double x) { return std::exp(law.log_pdf(std::span<const double>(&x, 1))); };
  };
  using divbound::testing::gauss_legendre_panels;
  // Tail of t_{2.5} beyond 1e4 carries ~1e-10 mass; trim with a wide window.
  EXPECT_NEAR(gauss_legendre_panels(f(t), -1e4, 1e4, 200000), 1.0, 1e-8);
  EXPECT_NEAR(gauss_legendre_panels(f(g), -30, 30, 400), 1.0, 1e-12);
  EXPECT_NEAR(gauss_legendre_panels(f(gam), 0, 60, 4000), 1.0, 1e-9);
}

TEST(Oracle, NonFiniteLogDensityAborts) {
  const o::DiagNormalLaw g({1.0});
  auto bad = [](std::span<const double>) { return std::nan(""); };
  EXPECT_THROW(o::mc_kl(
                   1, [&](o::Engine& e, std::span<double> x) { g.sample(e, x); },
                   [&](std::span<const double> x) { return g.log_pdf(x); }, bad, config(100, 1)),
               divbound::Error);
  EXPECT_THROW(o::mc_tv(g, g, config(0, 1)), divbound::Error);
}
