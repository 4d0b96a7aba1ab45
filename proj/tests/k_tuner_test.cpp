#include <gtest/gtest.h>

#include <random>

#include "amulap/error.hpp"
#include "amulap/k_tuner.hpp"
#include "amulap/metrics.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace amulap {
namespace {

TEST(CandidateSetsTest, Defaults) {
  EXPECT_EQ(default_k_candidates(), (std::vector<std::size_t>{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024}));
  EXPECT_EQ(finetune_k_candidates(), (std::vector<std::size_t>{1, 2, 4, 8, 16}));
}

TEST(ChooseKTest, PlateauPicksLargestK) {
  const std::vector<std::size_t> ks = {1, 2, 4};
  EXPECT_EQ(choose_largest_best_k(ks, std::vector<double>{0.81, 0.84, 0.84}), 4u);
  EXPECT_EQ(choose_largest_best_k(ks, std::vector<double>{0.9, 0.8, 0.7}), 1u);
  EXPECT_EQ(choose_largest_best_k(ks, std::vector<double>{0.5, 0.5, 0.5}), 4u);
  const std::vector<std::size_t> one = {8};
  EXPECT_EQ(choose_largest_best_k(one, std::vector<double>{0.1}), 8u);
}

// Naive sweep: rebuild the mapping for every k and score it the long way.
std::vector<double> naive_sweep(const ClassScoreTable& table, const DistributionDump& dev,
                                const std::vector<std::size_t>& ks, const TaskSpec& spec, const SelectorConfig& cfg) {
  std::vector<ClassId> gold;
  for (const auto& r : dev.records) gold.push_back(r.gold);
  std::vector<double> out;
  for (std::size_t k : ks) {
    const auto m = build_mapping(table, k, cfg);
    out.push_back(evaluate_metric(spec, oracle::predict_naive(m.sets, dev), gold));
  }
  return out;
}

TEST(SearchKTest, PrefixSweepMatchesNaiveSweep) {
  std::mt19937_64 rng(31);
  const std::vector<std::size_t> ks = {1, 2, 4, 8, 16};
  for (Method method : {Method::amulap, Method::amulap_no_dedup, Method::random}) {
    for (int trial = 0; trial < 30; ++trial) {
      const auto train = testing::random_dump(rng, 2, 4, 200);
      const auto dev = testing::random_dump(rng, 2, 6, 200, "dev");
      const auto table = mean_by_class(train, 2);
      SelectorConfig cfg;
      cfg.method = method;
      cfg.seed = static_cast<std::uint64_t>(trial);
      const auto spec = testing::sst2_spec();
      const auto result = search_k(table, dev, ks, spec, cfg);
      ASSERT_EQ(result.trace.dev_scores, naive_sweep(table, dev, ks, spec, cfg));
      ASSERT_EQ(result.mapping, build_mapping(table, result.trace.chosen_k, cfg));
    }
  }
}

TEST(SearchKTest, SingleCandidateEqualsDirectSelection) {
  std::mt19937_64 rng(32);
  const auto train = testing::random_dump(rng, 3, 4, 60);
  const auto dev = testing::random_dump(rng, 3, 4, 60, "dev");
  const auto table = mean_by_class(train, 3);
  const std::vector<std::size_t> ks = {4};
  const auto result = search_k(table, dev, ks, testing::mnli_spec(), {});
  EXPECT_EQ(result.trace.chosen_k, 4u);
  EXPECT_EQ(result.mapping, select_amulap(table, 4));
  EXPECT_EQ(result.trace.tuned_on, "dev");
}

TEST(SearchKTest, AutolSweepRebuildsPerK) {
  std::mt19937_64 rng(33);
  const auto train = testing::random_dump(rng, 2, 3, 20);
  const auto dev = testing::random_dump(rng, 2, 3, 20, "dev");
  SelectorConfig cfg;
  cfg.method = Method::autol;
  cfg.autol_train = &train;
  const std::vector<std::size_t> ks = {1, 2, 4};
  const auto table = log_likelihood_by_class(train, 2);
  const auto result = search_k(table, dev, ks, testing::sst2_spec(), cfg);
  EXPECT_EQ(result.trace.dev_scores, naive_sweep(table, dev, ks, testing::sst2_spec(), cfg));
  EXPECT_EQ(result.mapping.method, Method::autol);
  for (const auto& s : result.mapping.sets) EXPECT_EQ(s.size(), 1u);
}

TEST(SearchKTest, InvalidCandidatesRejected) {
  std::mt19937_64 rng(34);
  const auto d = testing::random_dump(rng, 2, 2, 10);
  const auto table = mean_by_class(d, 2);
  for (const std::vector<std::size_t>& ks : {std::vector<std::size_t>{}, {2, 1}, {0, 1}, {1, 1}}) {
    EXPECT_THROW(search_k(table, d, ks, testing::sst2_spec(), {}), Error);
  }
}

TEST(SearchKTest, SelectionErrorsNameTheK) {
  ClassScoreTable t;
  t.per_class = {{0.5, 0.5}, {0.5, 0.5}};
  t.n_per_class = {1, 1};
  DistributionDump d;
  d.vocab_size = 2;
  d.records = {{"a", 0, {0.5f, 0.5f}}};
  const std::vector<std::size_t> ks = {1, 2};
  try {
    search_k(t, d, ks, testing::sst2_spec(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::selection);
    EXPECT_NE(std::string(e.what()).find("(k=2)"), std::string::npos);
  }
}

TEST(TraceFormatTest, RoundTrip) {
  KSearchTrace t{{1, 2, 4}, {0.8125, 0.84375, 0.84375}, 4, "train"};
  const auto text = format_trace(t);
  EXPECT_EQ(text, "# tuned_on=train\nk\tdev_score\n1\t0.8125\n2\t0.84375\n4\t0.84375\nchosen_k\t4\n");
  const auto back = parse_trace(text);
  EXPECT_EQ(back.candidates, t.candidates);
  EXPECT_EQ(back.dev_scores, t.dev_scores);
  EXPECT_EQ(back.chosen_k, 4u);
  EXPECT_EQ(back.tuned_on, "train");
}

}  // namespace
}  // namespace amulap
