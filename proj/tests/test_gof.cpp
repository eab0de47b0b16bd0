#include <gtest/gtest.h>

#include <random>

#include "itoanova/gof.hpp"
#include "itoanova/sim.hpp"
#include "itoanova/stats.hpp"

using namespace itoanova;

namespace {

Column brownian(Index k, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  Column x(k + 1);
  x(0) = 1.0;
  for (Index i = 1; i <= k; ++i) x(i) = x(i - 1) + n(rng);
  return x;
}

}  // namespace

TEST(RSquared, ExactRegression) {
  const auto g = SamplingGrid::uniform(1.0, 256);
  const Column s = brownian(256, 0.06, 1), xi = 2.0 * s;
  const auto r = r_squared(xi, analyze(s, xi, g, {}));
  EXPECT_EQ(r.r2(256), 1.0);
  EXPECT_EQ(r.variance(256), 0.0);
}

TEST(RSquared, IndependentResponse) {
  const auto g = SamplingGrid::uniform(1.0, 4096);
  const auto o = subsample(simulate(ConstantRho{0, 1, 1}, 1.0, 4 * 4096, 3), g);
  const auto r = r_squared(o.paths.column("Xi"), analyze(o.paths.column("S"), o.paths.column("Xi"), g, {}));
  EXPECT_NEAR(r.r2(4096), 0.0, 0.1);
}

TEST(RSquared, ZeroTotal) {
  const auto g = SamplingGrid::uniform(1.0, 256);
  const Column s = brownian(256, 0.06, 1), xi = Column::Constant(257, 3.0);
  try {
    r_squared(xi, analyze(s, xi, g, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateTotalSS);
  }
}

TEST(ConstantBeta, ExactAndHomogeneous) {
  const auto g = SamplingGrid::uniform(1.0, 128);
  const Column s = brownian(128, 0.1, 2), xi = brownian(128, 0.1, 3);
  EXPECT_NEAR(fit_constant_beta(Column(2.0 * s), s, g), 2.0, 1e-14);
  const double t = fit_constant_beta(xi, s, g);
  EXPECT_NEAR(fit_constant_beta(xi, Column(3.0 * s), g), t / 3.0, 1e-14);
  EXPECT_THROW(fit_constant_beta(xi, Column::Constant(129, 1.0), g), Error);
}

TEST(ConstantBeta, IndependentMedian) {
  std::vector<double> th;
  const auto g = SamplingGrid::uniform(1.0, 4096);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto o = subsample(simulate(ConstantRho{0, 1, 1}, 1.0, 4 * 4096, seed), g);
    th.push_back(std::abs(fit_constant_beta(o.paths.column("Xi"), o.paths.column("S"), g)));
  }
  EXPECT_LT(stats::median(th), 0.1);
}

TEST(UStatistic, ExactNull) {
  const auto g = SamplingGrid::uniform(1.0, 512);
  const Column s = brownian(512, 0.05, 4), xi = 1.5 * s;
  const auto rep = analyze(s, xi, g, {});
  const auto f = u_statistic(xi, s, g, fit_constant_beta(xi, s, g), rep);
  EXPECT_NEAR(f.u, 0.0, 1e-12);
  EXPECT_EQ(f.p_value, 1.0);
  EXPECT_FALSE(f.rejected);
}

TEST(UStatistic, SeededAndReproducible) {
  const auto g = SamplingGrid::uniform(1.0, 1024);
  const auto o = subsample(simulate(MartingaleRho{}, 1.0, 4 * 1024, 5), g);
  const Column &s = o.paths.column("S"), &xi = o.paths.column("Xi");
  const auto rep = analyze(s, xi, g, {});
  const double th = fit_constant_beta(xi, s, g);
  GofOptions opt;
  opt.bootstrap = 19;
  opt.seed = 9;
  const auto a = u_statistic(xi, s, g, th, rep, opt), b = u_statistic(xi, s, g, th, rep, opt);
  EXPECT_EQ(a.null_sd, b.null_sd);
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_GT(a.null_sd, 0.0);
  EXPECT_NEAR(a.gap, std::sqrt(g.mean_spacing()) * a.u, 1e-15);
  // the first-order null sd 2 eta [V,S]_T vanishes for least-squares theta
  EXPECT_NEAR(a.vs_terminal, 0.0, 1e-12);
}
