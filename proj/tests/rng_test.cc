#include "uenl/rng.h"

#include <cmath>

#include "gtest/gtest.h"

namespace uenl {
namespace {

TEST(RngTest, StandardNormalMomentsAtOneMillionDraws) {
  RngStream rng(42, "resample");
  const Tensor t = SampleStandardNormal(rng, {1000000});
  double mean = 0;
  for (double v : t.values()) mean += v;
  mean /= static_cast<double>(t.size());
  double var = 0;
  for (double v : t.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(t.size() - 1);
  EXPECT_GE(mean, -0.004);
  EXPECT_LE(mean, 0.004);
  EXPECT_GE(var, 0.99);
  EXPECT_LE(var, 1.01);
}

TEST(RngTest, SameSeedIsBitIdentical) {
  RngStream a(7, "init"), b(7, "init");
  EXPECT_EQ(SampleStandardNormal(a, {3, 5}), SampleStandardNormal(b, {3, 5}));
  EXPECT_EQ(a.counter(), b.counter());
  RngStream c(8, "init");
  RngStream d(7, "init");
  EXPECT_NE(SampleStandardNormal(c, {3, 5}), SampleStandardNormal(d, {3, 5}));
}

TEST(RngTest, IndependentStreamsAreUncorrelated) {
  constexpr std::size_t n = 100000;
  RngStream a(42, 1), b(42, 2);
  const Tensor x = SampleStandardNormal(a, {n});
  const Tensor y = SampleStandardNormal(b, {n});
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.02);
}

TEST(RngTest, ForkedStreamsDependOnlyOnNameAndParent) {
  RngStream parent(3, "root");
  RngStream f1 = parent.Fork("dropout");
  parent.NextU64();
  RngStream f2 = parent.Fork("dropout");
  EXPECT_EQ(f1.NextU64(), f2.NextU64());
  EXPECT_NE(parent.Fork("shuffle").NextU64(), parent.Fork("dropout").NextU64());
}

TEST(RngTest, UniformStaysInOpenInterval) {
  RngStream rng(5, "u");
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int i = 0; i < 1000; ++i) ASSERT_LT(rng.UniformInt(7), 7u);
}

}  // namespace
}  // namespace uenl
