#include "uenl/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "uenl/errors.h"

namespace uenl {
namespace {

double PairwiseAuroc(const std::vector<double>& id, const std::vector<double>& ood) {
  double total = 0.0;
  for (double i : id) {
    for (double o : ood) total += i > o ? 1.0 : (i == o ? 0.5 : 0.0);
  }
  return total / (static_cast<double>(id.size()) * static_cast<double>(ood.size()));
}

std::size_t CountAtOrAbove(const std::vector<double>& v, double t) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(),
                                                [t](double s) { return s >= t; }));
}

std::vector<double> DistinctDescending(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::set<double, std::greater<>> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  return {all.begin(), all.end()};
}

double EnumeratedAupr(const std::vector<double>& id, const std::vector<double>& ood) {
  double area = 0.0;
  double previous_recall = 0.0;
  for (double t : DistinctDescending(id, ood)) {
    const std::size_t tp = CountAtOrAbove(id, t);
    const std::size_t fp = CountAtOrAbove(ood, t);
    const double recall = static_cast<double>(tp) / static_cast<double>(id.size());
    area += (recall - previous_recall) *
            (static_cast<double>(tp) / static_cast<double>(tp + fp));
    previous_recall = recall;
  }
  return area;
}

FprResult EnumeratedFpr(const std::vector<double>& id, const std::vector<double>& ood) {
  for (double t : DistinctDescending(id, ood)) {
    const double tpr =
        static_cast<double>(CountAtOrAbove(id, t)) / static_cast<double>(id.size());
    if (tpr >= 0.95) {
      return {static_cast<double>(CountAtOrAbove(ood, t)) /
                  static_cast<double>(ood.size()),
              t};
    }
  }
  ADD_FAILURE() << "no qualifying threshold";
  return {};
}

// Random instance with sizes in [1, 200]; about half the instances draw
// from a small integer grid so ties are common.
struct Instance {
  std::vector<double> id;
  std::vector<double> ood;
};

Instance RandomInstance(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> size(1, 200);
  const bool ties = std::bernoulli_distribution(0.5)(gen);
  std::uniform_int_distribution<int> grid(0, 9);
  std::normal_distribution<double> normal;
  auto draw = [&](double shift) {
    return ties ? static_cast<double>(grid(gen)) + (shift > 0 ? 1 : 0)
                : normal(gen) + shift;
  };
  Instance inst;
  inst.id.resize(size(gen));
  inst.ood.resize(size(gen));
  for (double& v : inst.id) v = draw(1.0);
  for (double& v : inst.ood) v = draw(0.0);
  return inst;
}

TEST(AurocTest, SimpleCases) {
  EXPECT_EQ(Auroc(std::vector<double>{2, 3}, std::vector<double>{0, 1}), 1.0);
  EXPECT_EQ(Auroc(std::vector<double>{1}, std::vector<double>{1}), 0.5);
  EXPECT_EQ(Auroc(std::vector<double>{0, 1}, std::vector<double>{2, 3}), 0.0);
}

TEST(AurocTest, MatchesPairwiseOracleExactly) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance inst = RandomInstance(gen);
    ASSERT_EQ(Auroc(inst.id, inst.ood), PairwiseAuroc(inst.id, inst.ood))
        << "trial " << trial;
  }
}

TEST(AurocTest, SwapComplementsWithoutTies) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  std::vector<double> a(50), b(70);
  for (double& v : a) v = normal(gen);
  for (double& v : b) v = normal(gen) + 0.5;
  EXPECT_NEAR(Auroc(a, b), 1.0 - Auroc(b, a), 1e-15);
}

TEST(AuprTest, SimpleCases) {
  EXPECT_EQ(Aupr(std::vector<double>{2, 3}, std::vector<double>{0, 1}), 1.0);
  EXPECT_EQ(Aupr(std::vector<double>{5, 5, 5}, std::vector<double>{5, 5, 5}), 0.5);
}

TEST(AuprTest, MatchesEnumerationOracleExactly) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance inst = RandomInstance(gen);
    ASSERT_EQ(Aupr(inst.id, inst.ood), EnumeratedAupr(inst.id, inst.ood))
        << "trial " << trial;
  }
}

TEST(FprTest, SimpleCases) {
  EXPECT_EQ(FprAt95Tpr(std::vector<double>{10, 11, 12}, std::vector<double>{0, 1}).fpr,
            0.0);
  std::vector<double> same(100);
  for (std::size_t i = 0; i < same.size(); ++i) same[i] = static_cast<double>(i);
  EXPECT_GE(FprAt95Tpr(same, same).fpr, 0.95);
}

TEST(FprTest, ShiftedRangeMatchesOracle) {
  std::vector<double> id(100), ood(100);
  for (int i = 0; i < 100; ++i) {
    id[i] = i + 1;
    ood[i] = id[i] - 10;
  }
  const FprResult got = FprAt95Tpr(id, ood);
  const FprResult want = EnumeratedFpr(id, ood);
  EXPECT_EQ(got.fpr, want.fpr);
  EXPECT_EQ(got.threshold, want.threshold);
  EXPECT_EQ(got.threshold, 6.0);
  EXPECT_EQ(got.fpr, 0.85);
}

TEST(FprTest, MatchesEnumerationOracleExactly) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const Instance inst = RandomInstance(gen);
    const FprResult got = FprAt95Tpr(inst.id, inst.ood);
    const FprResult want = EnumeratedFpr(inst.id, inst.ood);
    ASSERT_EQ(got.fpr, want.fpr) << "trial " << trial;
    ASSERT_EQ(got.threshold, want.threshold) << "trial " << trial;
  }
}

TEST(FprTest, ThresholdKeepsTprAtLeast95) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = RandomInstance(gen);
    const double beta = FprAt95Tpr(inst.id, inst.ood).threshold;
    EXPECT_GE(20 * CountAtOrAbove(inst.id, beta), 19 * inst.id.size());
  }
}

TEST(MetricsTest, MonotoneTransformInvariance) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = RandomInstance(gen);
    for (int kind = 0; kind < 2; ++kind) {
      auto f = [kind](double s) { return kind == 0 ? std::exp(s / 4.0) : 3.0 * s - 7.0; };
      std::vector<double> id(inst.id), ood(inst.ood);
      std::transform(id.begin(), id.end(), id.begin(), f);
      std::transform(ood.begin(), ood.end(), ood.begin(), f);
      EXPECT_NEAR(Auroc(id, ood), Auroc(inst.id, inst.ood), 1e-12);
      EXPECT_NEAR(FprAt95Tpr(id, ood).fpr, FprAt95Tpr(inst.id, inst.ood).fpr, 1e-12);
    }
  }
}

TEST(MetricsTest, ReportCarriesCountsAndRanges) {
  std::mt19937_64 gen(7);
  const Instance inst = RandomInstance(gen);
  const MetricReport r = ComputeMetrics(inst.id, inst.ood);
  EXPECT_EQ(r.n_id, inst.id.size());
  EXPECT_EQ(r.n_ood, inst.ood.size());
  for (double v : {r.fpr95, r.auroc, r.aupr}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(MetricsTest, RejectsEmptyAndNonFinite) {
  const std::vector<double> empty;
  const std::vector<double> one = {1.0};
  const std::vector<double> nan = {std::nan("")};
  EXPECT_THROW(Auroc(empty, one), Error);
  EXPECT_THROW(Aupr(one, empty), Error);
  EXPECT_THROW(FprAt95Tpr(empty, one), Error);
  EXPECT_THROW(Auroc(nan, one), Error);
}

TEST(MetricsTest, ScalesNearLinearithmically) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal;
  auto time_at = [&](std::size_t n) {
    std::vector<double> id(n), ood(n);
    for (double& v : id) v = normal(gen) + 1.0;
    for (double& v : ood) v = normal(gen);
    double best = 1e300;
    for (int rep = 0; rep < 3; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      (void)ComputeMetrics(id, ood);
      best = std::min(best, std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count());
    }
    return best;
  };
  const double small = time_at(20000);
  const double large = time_at(200000);
  EXPECT_LT(large / small, 20.0);
}

TEST(ErrorRateTest, Basics) {
  const std::vector<int> truth = {0, 1, 2, 1};
  EXPECT_EQ(ErrorRate(truth, truth), 0.0);
  EXPECT_EQ(ErrorRate(std::vector<int>{0, 1, 0, 0}, truth), 0.5);
  EXPECT_THROW(ErrorRate(std::vector<int>{0}, truth), Error);
}

TEST(HistogramTest, BoundaryConvention) {
  const auto bins = Histogram(std::vector<double>{0, 0.5, 1}, 2, std::pair{0.0, 1.0});
  ASSERT_EQ(bins.size(), 2u);
  // 0.5 opens the second bin; 1.0 falls in the closed last bin.
  EXPECT_EQ(bins[0].count, 1u);
  EXPECT_EQ(bins[1].count, 2u);
  EXPECT_EQ(bins[0].left, 0.0);
  EXPECT_EQ(bins[1].right, 1.0);
}

TEST(HistogramTest, UniformConcentration) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  for (double& v : s) v = u(gen);
  std::size_t total = 0;
  for (const HistogramBin& b : Histogram(s, 10, std::pair{0.0, 1.0})) {
    EXPECT_NEAR(static_cast<double>(b.count), 1e4, 300.0);
    total += b.count;
  }
  EXPECT_EQ(total, s.size());
}

TEST(HistogramTest, AutoRangeAndDegenerate) {
  const auto bins = Histogram(std::vector<double>{-3, 2, 7}, 4);
  EXPECT_EQ(bins.front().left, -3.0);
  EXPECT_EQ(bins.back().right, 7.0);
  EXPECT_EQ(bins.back().count, 1u);
  const auto flat = Histogram(std::vector<double>{2, 2}, 3);
  std::size_t total = 0;
  for (const auto& b : flat) total += b.count;
  EXPECT_EQ(total, 2u);
  EXPECT_THROW(Histogram(std::vector<double>{1}, 0), Error);
}

}  // namespace
}  // namespace uenl
