#include <gtest/gtest.h>

#include <random>

#include "itoanova/acceptance.hpp"
#include "itoanova/anova.hpp"
#include "itoanova/sim.hpp"
#include "itoanova/stats.hpp"

using namespace itoanova;

namespace {

Column brownian(Index k, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sd);
  Column x(k + 1);
  x(0) = 0.0;
  for (Index i = 1; i <= k; ++i) x(i) = x(i - 1) + n(rng);
  return x;
}

struct Sample {
  SamplingGrid grid;
  Column s, xi;
};

Sample sample(const SimModel& m, Index n, std::uint64_t seed) {
  const auto g = SamplingGrid::uniform(1.0, n);
  const auto o = subsample(simulate(m, 1.0, 16 * n, seed), g);
  return {g, o.paths.column("S"), o.paths.column("Xi")};
}

}  // namespace

TEST(Residuals, ExactRegressionVanishes) {
  std::mt19937_64 rng(1);
  const auto g = SamplingGrid::uniform(1.0, 100);
  const Column s = brownian(100, 0.1, rng);
  const auto r = residuals(Column(2.0 * s), s, Column::Constant(101, 2.0), g);
  EXPECT_TRUE(r.increments.isZero(1e-15));
}

TEST(Residuals, ZeroRhoOrConstantS) {
  std::mt19937_64 rng(2);
  const auto g = SamplingGrid::uniform(1.0, 50);
  const Column s = brownian(50, 0.1, rng), xi = brownian(50, 0.1, rng);
  const auto r0 = residuals(xi, s, Column::Zero(51), g);
  const auto rc = residuals(xi, Column::Constant(51, 4.0), Column::Constant(51, -3.0), g);
  for (Index i = 0; i <= 50; ++i) {
    EXPECT_NEAR(r0.path(i), xi(i) - xi(0), 1e-14);
    EXPECT_NEAR(rc.path(i), xi(i) - xi(0), 1e-14);
  }
}

TEST(QvAlpha, ZeroResidualIsZeroForEveryAlpha) {
  std::mt19937_64 rng(3);
  const auto g = SamplingGrid::uniform(1.0, 64);
  const Column s = brownian(64, 0.1, rng), xi = 2.0 * s, rho = Column::Constant(65, 2.0);
  const auto res = residuals(xi, s, rho, g);
  for (double a : {0.0, 0.3, 0.5, 1.0}) EXPECT_TRUE(qv_alpha(res, xi, s, rho, a).values.isZero(0));
}

TEST(QvAlpha, HalfIsXiCrossResidual) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  const auto g = SamplingGrid::uniform(1.0, 500);
  const Column s = brownian(500, 0.05, rng), xi = brownian(500, 0.05, rng);
  Column rho(501);
  for (auto& v : rho) v = u(rng);
  const auto res = residuals(xi, s, rho, g);
  const Column a = qv_alpha(res, xi, s, rho, 0.5).values, b = realized_cov(xi, res.path, g).values;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14 * b.cwiseAbs().maxCoeff());
}

TEST(QvAlpha, Convexity) {
  std::mt19937_64 rng(5);
  const auto g = SamplingGrid::uniform(1.0, 300);
  const Column s = brownian(300, 0.05, rng), xi = brownian(300, 0.05, rng), rho = Column::Constant(301, 0.7);
  const auto res = residuals(xi, s, rho, g);
  const Column q0 = qv_alpha(res, xi, s, rho, 0).values, q1 = qv_alpha(res, xi, s, rho, 1).values;
  for (double a : {0.1, 0.25, 0.8}) {
    const Column qa = qv_alpha(res, xi, s, rho, a).values;
    EXPECT_LE((qa - ((1 - a) * q0 + a * q1)).cwiseAbs().maxCoeff(), 1e-13 * q0.cwiseAbs().maxCoeff());
  }
}

TEST(Isotonic, ProjectsOntoMonotone) {
  Column x(6);
  x << 0, 2, 1, 3, 2.5, 4;
  const Column p = isotonic_projection(x);
  for (Index i = 1; i < 6; ++i) EXPECT_LE(p(i - 1), p(i));
  EXPECT_DOUBLE_EQ(p(1), 1.5);
  EXPECT_DOUBLE_EQ(p(3), 2.75);
  EXPECT_EQ(isotonic_projection(p), p);
}

TEST(Bias, ConstantRhoTableRows) {
  // constant rho plug-ins: no rho increments, no <rho,rho>'.
  BiasInputs in;
  const Index k = 100;
  in.c = 1.0;
  in.xis_rate = Column::Constant(k, 1.0);
  in.drho = Column::Zero(k);
  in.rho_qv = Column::Zero(k);
  in.dss = Column::Constant(k, 0.01);
  in.dzz = Column::Constant(k, 0.01);
  in.h_prime = Column::Ones(k);
  const auto g = SamplingGrid::uniform(1.0, k);
  EXPECT_NEAR(bias_alpha(in, g, 0.0).terminal(), 1.0, 1e-13);
  EXPECT_NEAR(bias_alpha(in, g, 1.0).terminal(), -1.0, 1e-13);
  EXPECT_EQ(bias_alpha(in, g, 0.5).terminal(), 0.0);
}

TEST(Bias, Alpha0AndAlpha1AreNegatives) {
  BiasInputs in;
  const Index k = 50;
  in.c = 0.7;
  in.xis_rate = Column::Constant(k, 1.3);
  in.drho = Column::Zero(k);
  in.rho_qv = Column::Constant(k, 0.4);
  in.dss = Column::Constant(k, 0.02);
  in.dzz = Column::Constant(k, 0.03);
  in.h_prime = Column::Constant(k, 10.0 / 9.0);
  const auto g = SamplingGrid::uniform(1.0, k);
  EXPECT_NEAR(bias_alpha(in, g, 0.0).terminal(), -bias_alpha(in, g, 1.0).terminal(), 1e-14);
}

TEST(BandConstant, MatchesOracle) {
  for (const auto& o : band_constant_oracle()) {
    EXPECT_NEAR(unit_band_constant(o.level), o.c1, 1e-9) << o.level;
    EXPECT_NEAR(unit_band_probability(o.c1), o.level, 1e-12);
  }
}

TEST(BandConstant, BrownianScaling) {
  // c_tau = sqrt(tau) c_1 for tau = 4 gives exactly twice c_1.
  const auto g = SamplingGrid::uniform(1.0, 4);
  QvPath est{g, Column::Zero(5)}, avar{g, (Column(5) << 0, 1, 2, 3, 4).finished()};
  const auto band = global_band(est, Column::Zero(5), avar, 0.95);
  EXPECT_EQ(band.c_tau, 2.0 * band.c_unit);
}

TEST(BandConstant, MonteCarloBrownianPaths) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  const double c1 = unit_band_constant(0.95);
  const int steps = 2000, paths = 4000;
  int inside = 0;
  for (int p = 0; p < paths; ++p) {
    double w = 0, mx = 0;
    for (int i = 0; i < steps; ++i) {
      w += n(rng) / std::sqrt(steps);
      mx = std::max(mx, std::abs(w));
    }
    inside += mx <= c1;
  }
  // discrete monitoring slightly overstates containment
  EXPECT_NEAR(inside / double(paths), 0.95, 0.015);
}

TEST(PointwiseCi, DegenerateAndWidening) {
  const auto g = SamplingGrid::uniform(1.0, 3);
  QvPath est{g, Column::Zero(4)}, zero{g, Column::Zero(4)};
  const auto ci = pointwise_ci(est, Column::Zero(4), zero, 0.95);
  EXPECT_TRUE(ci.lower.isZero(0));
  EXPECT_TRUE(ci.upper.isZero(0));
  QvPath e2{g, (Column(4) << 0, 0.3, 0.5, 0.9).finished()}, a2{g, (Column(4) << 0, 0.5, 1, 2).finished()};
  const auto lo = pointwise_ci(e2, Column::Zero(4), a2, 0.95), hi = pointwise_ci(e2, Column::Zero(4), a2, 0.99);
  for (Index i = 1; i < 4; ++i) {
    EXPECT_LT(hi.lower(i), lo.lower(i));
    EXPECT_GT(hi.upper(i), lo.upper(i));
  }
}

TEST(Options, Rejections) {
  AnovaOptions o;
  o.alpha = 1.5;
  EXPECT_THROW(validate_options(o), Error);
  o = {};
  o.level = 1.0;
  EXPECT_THROW(validate_options(o), Error);
  o = {};
  o.c = 0.0;
  EXPECT_THROW(validate_options(o), Error);
}

TEST(Analyze, ExactRegressionFile) {
  std::mt19937_64 rng(8);
  const auto g = SamplingGrid::uniform(1.0, 512);
  const Column s = brownian(512, 0.05, rng);
  const auto r = analyze(s, Column(2.0 * s), g, {});
  EXPECT_NEAR(r.estimate.terminal(), 0.0, 1e-10);
  EXPECT_FALSE(r.band.has_value());
}

TEST(Analyze, IsotonicIsMonotone) {
  const auto smp = sample(ConstantRho{1, 1, 1}, 1024, 3);
  AnovaOptions o;
  o.isotonic = true;
  const auto r = analyze(smp.s, smp.xi, smp.grid, o);
  for (Index i = 1; i < smp.grid.size(); ++i) ASSERT_LE(r.estimate.values(i - 1), r.estimate.values(i));
  EXPECT_TRUE(r.diag.isotonic_applied);
}

TEST(Analyze, AlphaHalfRelativeErrorMedian) {
  std::vector<double> rel;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const auto smp = sample(ConstantRho{1, 1, 1}, 4096, seed);
    rel.push_back(std::abs(analyze(smp.s, smp.xi, smp.grid, {}).estimate.terminal() - 1.0));
  }
  EXPECT_LT(stats::median(rel), 0.10);
}

TEST(Analyze, AvarEnsembleMedian) {
  std::vector<double> tau;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto smp = sample(ConstantRho{1, 1, 1}, 16384, seed);
    tau.push_back(analyze(smp.s, smp.xi, smp.grid, {}).avar.terminal());
  }
  EXPECT_NEAR(stats::median(tau), 2.0, 0.2);
}
