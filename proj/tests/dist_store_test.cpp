#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include "amulap/dist_store.hpp"
#include "amulap/error.hpp"
#include "amulap/mapping.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace amulap {
namespace {

using testing::TempDir;

DistributionDump tiny_dump(const Vocabulary& vocab) {
  DistributionDump d;
  d.vocab_size = static_cast<std::uint32_t>(vocab.size());
  d.vocab_hash = vocab.digest();
  d.model_tag = "roberta-large";
  d.records.push_back({"a", 0, {0.5f, 0.25f, 0.25f}});
  d.records.push_back({"b", 1, {0.0f, 0.0f, 1.0f}});
  return d;
}

TEST(DumpFormatTest, HeaderBytesAreBitExact) {
  const Vocabulary vocab({"x", "y", "z"});
  const auto bytes = encode_dump(tiny_dump(vocab));
  ASSERT_GE(bytes.size(), 4u + 2 + 4 + 32 + 4);
  EXPECT_EQ(bytes.substr(0, 4), "AMLP");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 3);  // |V|
  EXPECT_EQ(bytes.substr(10, 32), std::string(reinterpret_cast<const char*>(vocab.digest().data()), 32));
  EXPECT_EQ(static_cast<unsigned char>(bytes[42]), 13);  // model tag length
  EXPECT_EQ(bytes.substr(46, 13), "roberta-large");
  EXPECT_EQ(static_cast<unsigned char>(bytes[59]), 2);  // record count
  // First record: id "a", gold 0, then 0.5f = 0x3f000000 little-endian.
  EXPECT_EQ(bytes.substr(63, 5), std::string("\x01\x00\x00\x00" "a", 5));
  EXPECT_EQ(bytes.substr(70, 4), std::string("\x00\x00\x00\x3f", 4));
  EXPECT_EQ(bytes.size(), 63u + 2 * (4 + 1 + 2 + 3 * 4));
}

TEST(DumpFormatTest, FileRoundTripIsIdentity) {
  TempDir dir;
  const Vocabulary vocab = testing::numbered_vocab(50);
  std::mt19937_64 rng(3);
  auto dump = testing::random_dump(rng, 2, 16, vocab.size());
  dump.vocab_hash = vocab.digest();
  write_dump(dir / "d.amlp", dump);
  const auto back = read_dump(dir / "d.amlp", vocab);
  EXPECT_EQ(back, dump);
  EXPECT_EQ(back.records.size(), 32u);
  std::set<ClassId> classes;
  for (const auto& r : back.records) classes.insert(r.gold);
  EXPECT_EQ(classes.size(), 2u);
}

TEST(DumpFormatTest, RejectsUnnormalizedRecordCitingId) {
  TempDir dir;
  const Vocabulary vocab({"x", "y", "z"});
  auto d = tiny_dump(vocab);
  d.records[1].probs = {0.25f, 0.25f, 0.0f};
  write_dump(dir / "d.amlp", d);
  try {
    read_dump(dir / "d.amlp", vocab);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(DumpFormatTest, VocabHashMismatchIsCompatibilityError) {
  TempDir dir;
  const Vocabulary vocab({"x", "y", "z"});
  write_dump(dir / "d.amlp", tiny_dump(vocab));
  const Vocabulary other({"x", "y", "w"});
  try {
    read_dump(dir / "d.amlp", other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::compatibility);
  }
}

TEST(DumpFormatTest, TruncatedAndDuplicateInputsRejected) {
  const Vocabulary vocab({"x", "y", "z"});
  auto bytes = encode_dump(tiny_dump(vocab));
  EXPECT_THROW(decode_dump(bytes.substr(0, bytes.size() - 1)), Error);
  EXPECT_THROW(decode_dump(bytes + "x"), Error);
  auto d = tiny_dump(vocab);
  d.records[1].example_id = "a";
  EXPECT_THROW(validate_dump(d), Error);
}

TEST(MeanByClassTest, MeanOfOneAndSymmetry) {
  DistributionDump d;
  d.vocab_size = 2;
  d.records = {{"a", 0, {1.0f, 0.0f}}, {"b", 0, {0.0f, 1.0f}}, {"c", 1, {0.25f, 0.75f}}};
  const auto t = mean_by_class(d, 2);
  EXPECT_EQ(t.per_class[0], (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(t.per_class[1], (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(t.n_per_class, (std::vector<std::size_t>{2, 1}));
  EXPECT_FALSE(t.non_negativity_waived());
}

TEST(MeanByClassTest, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = testing::random_dump(rng, 3, 16, 97);
    const auto t = mean_by_class(d, 3);
    for (ClassId c = 0; c < 3; ++c) {
      const auto ref = oracle::naive_class_mean(d, c);
      for (std::size_t v = 0; v < ref.size(); ++v) ASSERT_NEAR(t.per_class[c][v], ref[v], 1e-9);
    }
  }
}

TEST(MeanByClassTest, PermutationInvariantAndPerClassScaling) {
  std::mt19937_64 rng(5);
  auto d = testing::random_dump(rng, 2, 8, 40);
  const auto base = mean_by_class(d, 2);
  std::shuffle(d.records.begin(), d.records.end(), rng);
  const auto shuffled = mean_by_class(d, 2);
  for (int c = 0; c < 2; ++c) {
    for (std::size_t v = 0; v < 40; ++v) EXPECT_NEAR(shuffled.per_class[c][v], base.per_class[c][v], 1e-12);
  }
  // Powers of two scale float records exactly.
  for (auto& r : d.records) {
    if (r.gold == 1) {
      for (auto& p : r.probs) p *= 4.0f;
    }
  }
  const auto scaled = mean_by_class(d, 2);
  for (std::size_t v = 0; v < 40; ++v) {
    EXPECT_NEAR(scaled.per_class[0][v], base.per_class[0][v], 1e-12);
    EXPECT_NEAR(scaled.per_class[1][v], 4.0 * base.per_class[1][v], 1e-12);
  }
}

TEST(MeanByClassTest, EmptyClassIsCoverageError) {
  DistributionDump d;
  d.vocab_size = 2;
  d.records = {{"a", 0, {1.0f, 0.0f}}};
  try {
    mean_by_class(d, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::coverage);
    EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos);
  }
}

TEST(ExternalScoresTest, IdentityIngestAndShapeErrors) {
  const auto t = parse_external_scores("1 -2.5 3\n0 0 7.25\n", 2, 3);
  EXPECT_EQ(t.per_class[0], (std::vector<double>{1, -2.5, 3}));
  EXPECT_EQ(t.per_class[1], (std::vector<double>{0, 0, 7.25}));
  EXPECT_TRUE(t.non_negativity_waived());
  try {
    parse_external_scores("1 2\n3 4 5\n", 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
  EXPECT_THROW(parse_external_scores("1 2 3\n", 2, 3), Error);
}

TEST(ExternalScoresTest, SelectionOnIngestedScoresMatchesProbabilityInput) {
  TempDir dir;
  std::mt19937_64 rng(8);
  const auto d = testing::random_dump(rng, 3, 4, 64);
  const auto probs = mean_by_class(d, 3);
  // Scores from an external ranker: any strictly increasing transform shared
  // by all classes preserves the argmax and the per-class order.
  ClassScoreTable projected = probs;
  for (auto& row : projected.per_class) {
    for (auto& z : row) z = 10.0 * z - 3.0;
  }
  {
    std::ofstream(dir / "scores.txt") << format_external_scores(projected);
  }
  const auto ingested = ingest_external_scores(dir / "scores.txt", 3, 64);
  for (std::size_t k : {1, 2, 4, 8}) {
    const auto a = select_amulap(probs, k);
    const auto b = select_amulap(ingested, k);
    EXPECT_EQ(a.sets, b.sets) << "k=" << k;
    EXPECT_EQ(b.method, Method::external);
  }
}

TEST(LogLikelihoodTest, SumsFlooredLogs) {
  DistributionDump d;
  d.vocab_size = 3;
  d.records = {{"a", 0, {0.5f, 0.5f, 0.0f}}, {"b", 0, {0.25f, 0.25f, 0.5f}}};
  const auto t = log_likelihood_by_class(d, 1);
  EXPECT_NEAR(t.per_class[0][0], std::log(0.5) + std::log(0.25), 1e-12);
  EXPECT_NEAR(t.per_class[0][2], std::log(kLogProbabilityFloor) + std::log(0.5), 1e-9);
}

}  // namespace
}  // namespace amulap
