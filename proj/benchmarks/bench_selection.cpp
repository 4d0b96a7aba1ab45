#include <benchmark/benchmark.h>

#include <random>

#include "amulap/k_tuner.hpp"
#include "amulap/mapping.hpp"
#include "amulap/metrics.hpp"
#include "amulap/scorer.hpp"

namespace {

using namespace amulap;

// RoBERTa-sized vocabulary.
constexpr std::size_t kVocab = 50265;

std::vector<float> random_probs(std::mt19937_64& rng, std::size_t vocab) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> raw(vocab);
  double sum = 0;
  for (auto& x : raw) sum += (x = e(rng));
  std::vector<float> out(vocab);
  for (std::size_t i = 0; i < vocab; ++i) out[i] = static_cast<float>(raw[i] / sum);
  return out;
}

DistributionDump random_dump(std::size_t classes, std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DistributionDump d;
  d.vocab_size = kVocab;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      d.records.push_back({std::to_string(seed) + "-" + std::to_string(c) + "-" + std::to_string(i),
                           static_cast<ClassId>(c), random_probs(rng, kVocab)});
    }
  }
  return d;
}

const DistributionDump& train_dump() {
  static const DistributionDump d = random_dump(3, 16, 1);
  return d;
}

const DistributionDump& dev_dump() {
  static const DistributionDump d = random_dump(3, 16, 2);
  return d;
}

void BM_MeanByClass(benchmark::State& state) {
  const auto& train = train_dump();
  for (auto _ : state) benchmark::DoNotOptimize(mean_by_class(train, 3));
}
BENCHMARK(BM_MeanByClass)->Unit(benchmark::kMillisecond);

void BM_SelectAmulap(benchmark::State& state) {
  const auto table = mean_by_class(train_dump(), 3);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(select_amulap(table, k));
}
BENCHMARK(BM_SelectAmulap)->Arg(1)->Arg(16)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_SelectNoDedup(benchmark::State& state) {
  const auto table = mean_by_class(train_dump(), 3);
  for (auto _ : state) benchmark::DoNotOptimize(select_no_dedup(table, 1024));
}
BENCHMARK(BM_SelectNoDedup)->Unit(benchmark::kMillisecond);

void BM_SearchKPrefixSweep(benchmark::State& state) {
  const auto table = mean_by_class(train_dump(), 3);
  const auto ks = default_k_candidates();
  const auto& dev = dev_dump();
  TaskSpec spec;
  spec.classes = {"entailment", "neutral", "contradiction"};
  for (auto _ : state) benchmark::DoNotOptimize(search_k(table, dev, ks, spec, {}));
}
BENCHMARK(BM_SearchKPrefixSweep)->Unit(benchmark::kMillisecond);

// Reference point for the sweep: rebuild and rescore the mapping at every k.
void BM_SearchKNaive(benchmark::State& state) {
  const auto table = mean_by_class(train_dump(), 3);
  const auto ks = default_k_candidates();
  std::vector<ClassId> gold;
  for (const auto& r : dev_dump().records) gold.push_back(r.gold);
  for (auto _ : state) {
    std::vector<double> scores;
    for (std::size_t k : ks) {
      std::vector<ClassId> pred;
      for (const auto& p : predict_batch(select_amulap(table, k), dev_dump())) pred.push_back(p.prediction.predicted);
      scores.push_back(accuracy(pred, gold));
    }
    benchmark::DoNotOptimize(choose_largest_best_k(ks, scores));
  }
}
BENCHMARK(BM_SearchKNaive)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  const auto mapping = select_amulap(mean_by_class(train_dump(), 3), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(predict_batch(mapping, dev_dump()));
}
BENCHMARK(BM_PredictBatch)->Arg(16)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
