#include <gtest/gtest.h>

#include <vector>

#include "itoanova/series.hpp"

using namespace itoanova;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(SamplingGrid, UniformIntegerTimes) {
  const std::vector<double> t{0, 1, 2, 3};
  SamplingGrid g{std::span<const double>(t)};
  EXPECT_EQ(g.mesh(), 1.0);
  EXPECT_EQ(g.mean_spacing(), 1.0);
  EXPECT_EQ(g.intervals(), 3);
}

TEST(SamplingGrid, IrregularMeshAndMean) {
  const std::vector<double> t{0, 0.5, 1.5, 3.0};
  SamplingGrid g{std::span<const double>(t)};
  EXPECT_DOUBLE_EQ(g.mesh(), 1.5);
  EXPECT_DOUBLE_EQ(g.mean_spacing(), 1.0);
}

TEST(SamplingGrid, Rejections) {
  EXPECT_EQ(kind_of([] { validate_grid(std::vector<double>{0, 2, 1}); }), ErrorKind::NonMonotoneTime);
  EXPECT_EQ(kind_of([] { validate_grid(std::vector<double>{0, 1, 1}); }), ErrorKind::NonMonotoneTime);
  EXPECT_EQ(kind_of([] { validate_grid(std::vector<double>{0}); }), ErrorKind::TooFewPoints);
  EXPECT_EQ(kind_of([] { validate_grid(std::vector<double>{0.5, 1}); }), ErrorKind::FirstTimeNonzero);
  EXPECT_EQ(kind_of([] { validate_grid(std::vector<double>{0, std::nan("")}); }), ErrorKind::NonFiniteTime);
}

TEST(SamplingGrid, LastIndexAtOrBefore) {
  const auto g = SamplingGrid::uniform(1.0, 4);
  EXPECT_EQ(g.last_index_at_or_before(-0.1), -1);
  EXPECT_EQ(g.last_index_at_or_before(0.0), 0);
  EXPECT_EQ(g.last_index_at_or_before(0.3), 1);
  EXPECT_EQ(g.last_index_at_or_before(0.5), 2);
  EXPECT_EQ(g.last_index_at_or_before(2.0), 4);
}

TEST(HCurve, UniformIsIdentityExactly) {
  for (Index k : {1, 7, 64, 1000, 4096}) {
    for (double T : {1.0, 0.25, 3.0}) {
      const auto g = SamplingGrid::uniform(T, k);
      const Column h = h_curve(g);
      for (Index j = 0; j <= k; ++j) {
        if ((k & (k - 1)) == 0 && T != 3.0)
          ASSERT_EQ(h(j), g[j]) << "k=" << k << " j=" << j;  // dyadic spacings: bitwise
        else
          ASSERT_NEAR(h(j), g[j], 1e-12 * T) << "k=" << k << " j=" << j;
      }
    }
  }
}

TEST(HCurve, AlternatingSlopeTenNinths) {
  const auto g = SamplingGrid::alternating(1.0, 300);
  const Column h = h_curve(g);
  for (Index j = 2; j <= g.intervals(); j += 2) EXPECT_NEAR(h(j) / g[j], 10.0 / 9.0, 1e-12);
}

TEST(HCurve, SingleInterval) {
  const std::vector<double> t{0, 0.7};
  SamplingGrid g{std::span<const double>(t)};
  EXPECT_DOUBLE_EQ(h_curve(g)(1), 0.7);
}

TEST(HPrime, UniformIsOne) {
  const auto g = SamplingGrid::uniform(1.0, 256);
  const auto hp = h_prime_window(g, 0.1);
  EXPECT_TRUE(std::isnan(hp.values(0)));
  for (Index j = 1; j <= g.intervals(); ++j) EXPECT_NEAR(hp.values(j), 1.0, 1e-12);
}

TEST(HPrime, AlternatingWholePairs) {
  const auto g = SamplingGrid::alternating(1.0, 300);
  const double pair = g[2];
  const auto hp = h_prime_window(g, 10 * pair);
  for (Index j = 20; j <= g.intervals(); j += 2) EXPECT_NEAR(hp.values(j), 10.0 / 9.0, 1e-9);
}

TEST(HPrime, WindowEqualsHorizon) {
  const auto g = SamplingGrid::alternating(2.0, 40);
  const Column h = h_curve(g);
  const auto hp = h_prime_window(g, 2.0);
  EXPECT_NEAR(hp.values(g.intervals()), h(g.intervals()) / 2.0, 1e-14);
}

TEST(Align, IdenticalStamps) {
  RawSeries s{{0, 1, 2}, {1, 2, 3}}, x{{0, 1, 2}, {4, 5, 6}};
  const auto p = previous_tick_align(s, x);
  ASSERT_EQ(p.grid().size(), 3);
  EXPECT_EQ(p.column("S")(2), 3);
  EXPECT_EQ(p.column("Xi")(1), 5);
}

TEST(Align, CarryForward) {
  RawSeries s{{0, 1, 2}, {1, 2, 3}}, x{{0, 2}, {10, 20}};
  const auto p = previous_tick_align(s, x);
  ASSERT_EQ(p.grid().size(), 3);
  EXPECT_EQ(p.grid()[1], 1.0);
  EXPECT_EQ(p.column("Xi")(1), 10);
  EXPECT_EQ(p.column("Xi")(2), 20);
}

TEST(Align, DisjointRanges) {
  RawSeries s{{0, 1}, {1, 2}}, x{{2, 3}, {1, 2}};
  EXPECT_EQ(kind_of([&] { previous_tick_align(s, x); }), ErrorKind::NoOverlap);
}

TEST(PathSeries, MissingColumnNamesIt) {
  PathSeries p(SamplingGrid::uniform(1, 2), {"S"}, {Column::Zero(3)});
  try {
    p.column("Xi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FormatError);
    EXPECT_NE(std::string(e.what()).find("Xi"), std::string::npos);
  }
}
