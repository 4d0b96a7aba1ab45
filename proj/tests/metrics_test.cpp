#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "amulap/error.hpp"
#include "amulap/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace amulap {
namespace {

using Labels = std::vector<ClassId>;

TEST(AccuracyTest, Examples) {
  EXPECT_DOUBLE_EQ(accuracy(Labels{0, 1, 1, 0}, Labels{0, 1, 0, 0}), 0.75);
  EXPECT_DOUBLE_EQ(accuracy(Labels{2}, Labels{2}), 1.0);
}

TEST(F1Test, ExamplesAndZeroConvention) {
  // tp=1 fp=1 fn=1: precision = recall = 0.5.
  EXPECT_DOUBLE_EQ(f1_binary(Labels{1, 1, 0, 0}, Labels{1, 0, 1, 0}, 1), 0.5);
  EXPECT_DOUBLE_EQ(f1_binary(Labels{0, 0}, Labels{0, 0}, 1), 0.0);
  EXPECT_DOUBLE_EQ(f1_binary(Labels{0, 0}, Labels{1, 1}, 1), 0.0);
  EXPECT_DOUBLE_EQ(f1_binary(Labels{1, 1}, Labels{1, 1}, 1), 1.0);
}

TEST(MatthewsTest, ExamplesAndZeroConvention) {
  EXPECT_DOUBLE_EQ(matthews(Labels{1, 0, 1, 0}, Labels{1, 0, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(matthews(Labels{0, 1, 0, 1}, Labels{1, 0, 1, 0}), -1.0);
  EXPECT_DOUBLE_EQ(matthews(Labels{1, 1, 1, 1}, Labels{1, 0, 1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(matthews(Labels{1, 0, 1, 0}, Labels{0, 0, 0, 0}), 0.0);
  EXPECT_THROW(matthews(Labels{2}, Labels{1}), Error);
}

TEST(MetricsTest, ShapeErrors) {
  for (auto fn : {+[](Labels p, Labels g) { return accuracy(p, g); }, +[](Labels p, Labels g) { return matthews(p, g); },
                  +[](Labels p, Labels g) { return f1_binary(p, g, 1); }}) {
    try {
      fn({0, 1}, {0});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::shape);
    }
    EXPECT_THROW(fn({}, {}), Error);
  }
}

TEST(MetricsTest, AgreeWithConfusionOracles) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    Labels p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<ClassId>(rng() % 2);
      g[i] = static_cast<ClassId>(rng() % 2);
    }
    const auto m = oracle::confusion(p, g, 1);
    ASSERT_NEAR(accuracy(p, g), static_cast<double>(m.tp + m.tn) / n, 1e-12);
    ASSERT_NEAR(f1_binary(p, g, 1), oracle::f1_reference(m), 1e-12);
    ASSERT_NEAR(f1_binary(p, g, 0), oracle::f1_reference(oracle::confusion(p, g, 0)), 1e-12);
    ASSERT_NEAR(matthews(p, g), oracle::mcc_reference(m), 1e-12);
    ASSERT_NEAR(matthews(p, g), matthews(g, p), 1e-12);
  }
}

TEST(EvaluateMetricTest, DispatchesOnSpec) {
  auto spec = testing::sst2_spec();
  const Labels p = {1, 1, 0, 0}, g = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(evaluate_metric(spec, p, g), 0.5);
  spec.metric = Metric::f1;
  spec.positive_class = 1;
  EXPECT_DOUBLE_EQ(evaluate_metric(spec, p, g), 0.5);
  spec.metric = Metric::matthews;
  EXPECT_DOUBLE_EQ(evaluate_metric(spec, p, g), 0.0);
}

TEST(AggregateTest, MeanAndPopulationStd) {
  const auto two = aggregate({{13, 0.86}, {21, 0.88}}, "accuracy");
  EXPECT_NEAR(two.mean, 0.87, 1e-12);
  EXPECT_NEAR(two.std, 0.01, 1e-12);
  EXPECT_EQ(format_report_cell(two), "87.0 (1.0)");

  const std::vector<double> v = {0.845, 0.871, 0.889, 0.859, 0.881};
  std::vector<std::pair<std::uint64_t, double>> per_seed;
  for (std::size_t i = 0; i < v.size(); ++i) per_seed.push_back({i, v[i]});
  const auto r = aggregate(per_seed);
  long double mean = 0, var = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  for (double x : v) var += (x - mean) * (x - mean);
  var /= v.size();
  EXPECT_NEAR(r.mean, static_cast<double>(mean), 1e-12);
  EXPECT_NEAR(r.std, static_cast<double>(std::sqrt(var)), 1e-12);
  EXPECT_EQ(format_report_cell(r), "86.9 (1.6)");

  try {
    aggregate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::arity);
  }
}

TEST(ReportFormatTest, RoundTrip) {
  const auto r = aggregate({{13, 0.8125}, {21, 0.75}, {42, 0.875}}, "f1");
  const auto back = parse_report_tsv(format_report_tsv(r));
  EXPECT_EQ(back.per_seed, r.per_seed);
  EXPECT_DOUBLE_EQ(back.mean, r.mean);
  EXPECT_DOUBLE_EQ(back.std, r.std);
  EXPECT_EQ(back.metric_name, "f1");
}

}  // namespace
}  // namespace amulap
