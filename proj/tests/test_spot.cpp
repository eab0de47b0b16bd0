#include <gtest/gtest.h>

#include <algorithm>

#include "itoanova/sim.hpp"
#include "itoanova/spot.hpp"
#include "itoanova/stats.hpp"

using namespace itoanova;

namespace {
Column walk(Index k, double scale, unsigned seed) {
  Column x(k + 1);
  x(0) = 1.0;
  for (Index i = 1; i <= k; ++i) x(i) = x(i - 1) + scale * std::sin(1.7 * static_cast<double>(i * seed) + 0.3);
  return x;
}
}  // namespace

TEST(Spot, LastTwoSquaredIncrements) {
  const auto g = SamplingGrid::uniform(4.0, 4);
  Column x(5);
  x << 0, 1, 0, 2, 2;
  const auto sp = spot_cov(x, x, g, Bandwidth::from_h(2.0, g));
  EXPECT_DOUBLE_EQ(sp.values(4), 2.0);
}

TEST(Spot, ConstantIsZero) {
  const auto g = SamplingGrid::uniform(1.0, 64);
  const auto sp = spot_cov(Column::Constant(65, 1.0), walk(64, 0.1, 1), g, Bandwidth::from_h(0.25, g));
  EXPECT_TRUE(sp.values.isZero(0));
}

TEST(Spot, WindowIsHorizon) {
  const auto g = SamplingGrid::uniform(2.0, 32);
  const Column x = walk(32, 0.1, 3), y = walk(32, 0.2, 5);
  const auto sp = spot_cov(x, y, g, Bandwidth::from_h(2.0, g));
  EXPECT_NEAR(sp.values(32), realized_cov(x, y, g).terminal() / 2.0, 1e-15);
}

TEST(Spot, WindowStartsMembership) {
  const auto g = SamplingGrid::alternating(1.0, 50);
  const double h = 0.1;
  const auto ws = window_starts(g, h);
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] < h - 1e-12) {
      EXPECT_EQ(ws[static_cast<std::size_t>(i)], -1);
      continue;
    }
    const Index j = ws[static_cast<std::size_t>(i)];
    ASSERT_GE(j, 0);
    EXPECT_GE(g[j], g[i] - h - 1e-12);
    if (j > 0) EXPECT_LT(g[j - 1], g[i] - h - 1e-12);
  }
}

TEST(RhoHat, ExactLinearity) {
  const auto g = SamplingGrid::uniform(1.0, 256);
  const Column s = walk(256, 0.05, 7);
  for (double r : {2.0, -1.0}) {
    const auto rho = rho_hat(s, Column(r * s), g, Bandwidth::from_c(1.0, g));
    for (Index i = 0; i < g.size(); ++i)
      if (rho.valid[static_cast<std::size_t>(i)]) ASSERT_NEAR(rho.values(i), r, 1e-12);
  }
}

TEST(RhoHat, FloorCarriesForward) {
  const auto g = SamplingGrid::uniform(1.0, 256);
  Column s = walk(256, 0.05, 7);
  for (Index i = 128; i <= 256; ++i) s(i) = s(127);
  const auto rho = rho_hat(s, Column(3.0 * s), g, Bandwidth::from_c(1.0, g));
  EXPECT_GT(rho.floor_hits, 0);
  EXPECT_EQ(rho.valid[256], 0);
  EXPECT_NEAR(rho.values(256), 3.0, 1e-12);
}

TEST(VarianceProfile, ConstantRhoPlugIn) {
  const Index k = 8;
  const Column zero = Column::Zero(k + 1), xixi = Column::Constant(k + 1, 5.0), ss = Column::Constant(k + 1, 1.0),
               rho = Column::Constant(k + 1, 2.0), hp = Column::Constant(k + 1, 1.0);
  const Column v = rho_variance_profile(zero, xixi, ss, rho, hp, 0.5);
  for (Index i = 0; i <= k; ++i) EXPECT_NEAR(v(i), 0.5 * (5.0 - 4.0), 1e-15);
  const Column v0 = rho_variance_profile(zero, Column::Constant(k + 1, 4.0), ss, rho, hp, 0.5);
  EXPECT_TRUE(v0.isZero(0));
}

TEST(VarianceProfile, ExactRegressionIsZero) {
  const auto g = SamplingGrid::uniform(1.0, 1024);
  const Column s = walk(1024, 0.03, 11);
  const auto bw = Bandwidth::from_c(1.0, g);
  const auto sp = estimate_spot(s, Column(2.0 * s), g, bw);
  const Column v = rho_variance_profile(sp, h_prime_window(g, bw.h));
  for (Index i = sp.rho.valid_from; i < g.size(); ++i) ASSERT_NEAR(v(i), 0.0, 1e-9);
}

TEST(VarianceProfile, MartingaleRhoTimeAverage) {
  // sigma_rho^2 / (3c) + c sigma_Z^2 / sigma_S^2 = 1/3 + 1.
  std::vector<double> averages;
  const auto g = SamplingGrid::uniform(1.0, 4096);
  const auto bw = Bandwidth::from_c(1.0, g);
  const auto hp = h_prime_window(g, bw.h);
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto f = simulate(MartingaleRho{1, 1, 1, 1}, 1.0, 4096 * 4, seed);
    const auto o = subsample(f, g);
    const auto sp = estimate_spot(o.paths.column("S"), o.paths.column("Xi"), g, bw);
    const Column v = rho_variance_profile(sp, hp);
    double sum = 0;
    Index m = 0;
    for (Index i = sp.rho.valid_from; i < g.size(); ++i, ++m) sum += v(i);
    averages.push_back(sum / static_cast<double>(m));
  }
  EXPECT_NEAR(stats::median(averages), 4.0 / 3.0, 0.15 * 4.0 / 3.0);
}
