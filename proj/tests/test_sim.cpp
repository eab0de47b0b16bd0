#include <gtest/gtest.h>

#include "itoanova/sim.hpp"

using namespace itoanova;

TEST(Simulate, ZeroResidualVolatility) {
  const auto f = simulate(ConstantRho{2.0, 1.0, 0.0}, 1.0, 4096, 5);
  for (Index j = 0; j <= f.n_fine; ++j) ASSERT_NEAR(f.xi(j) - f.xi(0), 2.0 * (f.s(j) - f.s(0)), 1e-12);
  EXPECT_TRUE(f.qv_z.isZero(0));
}

TEST(Simulate, ZeroRhoTruth) {
  const auto f = simulate(ConstantRho{0.0, 1.0, 1.0}, 1.0, 1024, 5);
  EXPECT_NEAR(f.qv_z(f.n_fine), 1.0, 1e-12);
  EXPECT_TRUE(f.int_rho2_dss.isZero(0));
}

TEST(Simulate, SameSeedSamePath) {
  const SimModel m = MartingaleRho{};
  const auto a = simulate(m, 1.0, 1024, 42), b = simulate(m, 1.0, 1024, 42), c = simulate(m, 1.0, 1024, 43);
  EXPECT_EQ(a.xi, b.xi);
  EXPECT_NE(a.xi, c.xi);
}

TEST(Simulate, VasicekHedgeRatio) {
  const VasicekBondPair m{};
  const auto f = simulate(m, 1.0, 2048, 9);
  for (Index j = 0; j <= f.n_fine; j += 97) {
    const double t = f.time(j);
    const double b1 = vasicek::duration_factor(m.kappa, m.maturity1 - t);
    const double b2 = vasicek::duration_factor(m.kappa, m.maturity2 - t);
    EXPECT_NEAR(f.rho(j), b2 * f.xi(j) / (b1 * f.s(j)), 1e-12 * std::abs(f.rho(j)));
  }
  EXPECT_NEAR(vasicek::bond_price(m, 0.03, 0.0), 1.0, 1e-15);
}

TEST(Simulate, StochVolRandomResidualQv) {
  const auto a = simulate(StochVol{}, 1.0, 1024, 1), b = simulate(StochVol{}, 1.0, 1024, 2);
  EXPECT_NE(a.qv_z(a.n_fine), b.qv_z(b.n_fine));
}

TEST(Model, JsonRoundTripAndErrors) {
  const SimModel m = MartingaleRho{0.5, 2.0, 1.5, 0.25};
  const auto back = model_from_json(model_to_json(m));
  EXPECT_EQ(model_to_json(back), model_to_json(m));
  try {
    model_from_json({{"model", "Heston"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    const std::string what = e.what();
    for (const char* v : {"ConstantRho", "MartingaleRho", "StochVol", "VasicekBondPair"})
      EXPECT_NE(what.find(v), std::string::npos) << v;
  }
}

TEST(Model, Validation) {
  EXPECT_THROW(validate_model(ConstantRho{1, 0, 1}, 1), Error);
  EXPECT_THROW(validate_model(ConstantRho{1, 1, -1}, 1), Error);
  EXPECT_THROW(validate_model(VasicekBondPair{0.5, 0.05, 0.02, 5.0, 2.0, 0.05}, 1), Error);
  EXPECT_NO_THROW(validate_model(StochVol{}, 1));
}

TEST(Subsample, IdentityOnFineGrid) {
  const auto f = simulate(ConstantRho{}, 1.0, 1024, 3);
  const auto o = subsample(f, SamplingGrid::uniform(1.0, 1024));
  EXPECT_EQ(o.paths.column("S"), f.s);
  EXPECT_EQ(o.paths.column("Xi"), f.xi);
}

TEST(Subsample, IntegerStride) {
  const auto f = simulate(ConstantRho{}, 1.0, Index{1} << 16, 3);
  const auto o = subsample(f, SamplingGrid::uniform(1.0, 256));
  for (Index i = 0; i <= 256; ++i) ASSERT_EQ(o.paths.column("S")(i), f.s(256 * i));
  EXPECT_EQ(o.max_snap_error, 0.0);
}

TEST(Subsample, AlternatingSnapError) {
  const auto f = simulate(ConstantRho{}, 1.0, 4096, 3);
  const auto o = subsample(f, SamplingGrid::alternating(1.0, 100));
  EXPECT_LE(o.max_snap_error, f.step() / 2 + 1e-15);
}

TEST(GroundTruth, ConstantRhoTau) {
  const auto f = simulate(ConstantRho{1, 1, 1}, 1.0, 4096, 3);
  const auto o = subsample(f, SamplingGrid::uniform(1.0, 64));
  const auto t = ground_truth(f, o);
  EXPECT_NEAR(t.tau, 2.0, 1e-12);
  EXPECT_NEAR(t.qv_z(64), 1.0, 1e-12);
}
