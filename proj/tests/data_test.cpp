#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "amulap/data.hpp"
#include "amulap/error.hpp"
#include "amulap/rng.hpp"
#include "test_support.hpp"

namespace amulap {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<Example> balanced_pool(std::size_t classes, std::size_t per_class) {
  std::vector<Example> pool;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < classes; ++c) {
      pool.push_back({"id" + std::to_string(pool.size()), "sentence " + std::to_string(pool.size()), std::nullopt,
                      static_cast<ClassId>(c)});
    }
  }
  return pool;
}

TEST(SplitRngTest, Mt19937ReferenceVector) {
  // The C++ standard pins the 10000th output of a default-seeded mt19937_64.
  SplitRng rng(5489u);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(SplitRngTest, BelowStaysInRange) {
  SplitRng rng(1);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 7ull, 1000ull, (1ull << 63) + 5}) {
    for (int i = 0; i < 200; ++i) EXPECT_LT(rng.below(bound), bound);
  }
}

TEST(VocabularyTest, DenseIdsAndDigest) {
  Vocabulary v({"great", "terrible", "</s>"});
  EXPECT_EQ(v.size(), 3u);
  for (TokenId i = 0; i < v.size(); ++i) EXPECT_EQ(v.id_of(v.token(i)), i);
  EXPECT_FALSE(v.id_of("missing"));
  EXPECT_EQ(v.digest(), sha256("great\nterrible\n</s>"));
  // Known SHA-256 of "abc".
  EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(VocabularyTest, RejectsDuplicatesAndSeparators) {
  EXPECT_THROW(Vocabulary({"a", "b", "a"}), Error);
  EXPECT_THROW(Vocabulary({"a\tb"}), Error);
  EXPECT_THROW(Vocabulary({""}), Error);
}

TEST(VocabularyTest, FileRoundTrip) {
  TempDir dir;
  Vocabulary v({"Ġgreat", "Ġterrible", "</s>"});
  write_vocabulary(dir / "vocab.txt", v);
  const auto back = load_vocabulary(dir / "vocab.txt");
  EXPECT_EQ(back.tokens(), v.tokens());
  EXPECT_EQ(back.digest(), v.digest());
}

TEST(TaskSpecTest, ParsesKeyValueFile) {
  const auto spec = parse_task_spec(
      "# MRPC\n"
      "task_name = MRPC\n"
      "classes = not_equivalent, equivalent\n"
      "template = <S1> [MASK] , <S2>\n"
      "metric = f1\n"
      "positive_class = equivalent\n");
  EXPECT_EQ(spec.task_name, "MRPC");
  EXPECT_EQ(spec.classes, (std::vector<std::string>{"not_equivalent", "equivalent"}));
  EXPECT_EQ(spec.metric, Metric::f1);
  EXPECT_EQ(spec.positive_class, ClassId{1});
  EXPECT_TRUE(spec.needs_second_sentence());
  EXPECT_EQ(parse_task_spec(format_task_spec(spec)).classes, spec.classes);
}

TEST(TaskSpecTest, RejectsBadTemplatesAndMissingPositiveClass) {
  const std::string base = "task_name = T\nclasses = a,b\nmetric = accuracy\n";
  EXPECT_THROW(parse_task_spec(base + "template = <S1> no mask\n"), Error);
  EXPECT_THROW(parse_task_spec(base + "template = <S1> [MASK] [MASK]\n"), Error);
  EXPECT_THROW(parse_task_spec("task_name = T\nclasses = a,a\ntemplate = <S1> [MASK]\n"), Error);
  EXPECT_THROW(parse_task_spec("task_name = T\nclasses = a,b\ntemplate = <S1> [MASK]\nmetric = f1\n"), Error);
}

TEST(LoadDatasetTest, TsvLabelsByIndex) {
  TempDir dir;
  write_text(dir / "d.tsv", "sentence1\tlabel\na fun movie\t1\na dull movie\t0\n");
  const auto rows = load_dataset(dir / "d.tsv", testing::sst2_spec());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].gold, 1);
  EXPECT_EQ(rows[1].gold, 0);
  EXPECT_EQ(rows[0].sentence1, "a fun movie");
  EXPECT_FALSE(rows[0].sentence2);
  EXPECT_EQ(rows[0].id, "0");
}

TEST(LoadDatasetTest, UnknownLabelNamesTheValue) {
  TempDir dir;
  write_text(dir / "d.tsv", "sentence1\tlabel\nfine\tpositive\nhmm\tmaybe\n");
  try {
    load_dataset(dir / "d.tsv", testing::sst2_spec());
    FAIL() << "expected a label error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::label);
    EXPECT_NE(std::string(e.what()).find("maybe"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadDatasetTest, MalformedRowReportsLine) {
  TempDir dir;
  write_text(dir / "d.tsv", "sentence1\tlabel\nok\t1\nbroken row\n");
  try {
    load_dataset(dir / "d.tsv", testing::sst2_spec());
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadDatasetTest, JsonlPairRoundTrip) {
  TempDir dir;
  const auto spec = testing::mnli_spec();
  std::vector<Example> written = {
      {"m0", "A man plays.", "Someone plays.", 0},
      {"m1", "A dog runs\tfast.", "The cat sleeps.", 2},
      {"m2", "It rains.", "It might be \"wet\".", 1},
  };
  write_jsonl_dataset(dir / "mnli.jsonl", written, spec);
  EXPECT_EQ(load_dataset(dir / "mnli.jsonl", spec), written);
}

TEST(SampleSplitTest, SixteenShotBalancedDisjointDeterministic) {
  const auto spec = testing::sst2_spec();
  const auto pool = balanced_pool(2, 100);
  const auto a = sample_split(spec, pool, 16, 42);
  const auto b = sample_split(spec, pool, 16, 42);
  EXPECT_EQ(a, b);
  EXPECT_EQ(format_split(a, spec), format_split(b, spec));
  EXPECT_EQ(a.train.size(), 32u);
  EXPECT_EQ(a.dev.size(), a.train.size());
  std::set<std::string> ids;
  for (const auto* part : {&a.train, &a.dev}) {
    std::vector<int> count(2, 0);
    for (const auto& ex : *part) {
      ++count[ex.gold];
      EXPECT_TRUE(ids.insert(ex.id).second) << ex.id;
    }
    EXPECT_EQ(count, (std::vector<int>{16, 16}));
  }
  EXPECT_NE(sample_split(spec, pool, 16, 43), a);
}

TEST(SampleSplitTest, CapacityErrorNamesClass) {
  auto pool = balanced_pool(2, 40);
  std::erase_if(pool, [n = 0](const Example& e) mutable { return e.gold == 1 && n++ >= 10; });
  try {
    sample_split(testing::sst2_spec(), pool, 16, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capacity);
    EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
  }
}

TEST(SampleSplitTest, PropertyInvariantsOverSeeds) {
  const auto spec = testing::mnli_spec();
  const auto pool = balanced_pool(3, 20);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 1 + seed % 10;
    const auto s = sample_split(spec, pool, n, seed);
    ASSERT_EQ(s.train.size(), 3 * n);
    ASSERT_EQ(s.dev.size(), s.train.size());
    std::set<std::string> ids;
    for (const auto& e : s.train) ids.insert(e.id);
    for (const auto& e : s.dev) ids.insert(e.id);
    ASSERT_EQ(ids.size(), 6 * n);
    for (ClassId c = 0; c < 3; ++c) {
      ASSERT_EQ(std::count_if(s.train.begin(), s.train.end(), [&](auto& e) { return e.gold == c; }),
                static_cast<long>(n));
    }
  }
}

TEST(SampleSplitTest, SplitFileRoundTrip) {
  TempDir dir;
  const auto spec = testing::mnli_spec();
  std::vector<Example> pool;
  for (int i = 0; i < 12; ++i) {
    pool.push_back({"p" + std::to_string(i), "premise\twith tab " + std::to_string(i), "hyp\\" + std::to_string(i),
                    static_cast<ClassId>(i % 3)});
  }
  const auto split = sample_split(spec, pool, 2, 7);
  write_split(dir / "s.split", split, spec);
  EXPECT_EQ(read_split(dir / "s.split", spec), split);
}

TEST(ApplyTemplateTest, TableTemplates) {
  const Example single{"x", "a fun movie", std::nullopt, 1};
  EXPECT_EQ(apply_template(testing::sst2_spec(), single), "a fun movie It was [MASK] .");
  const Example pair{"y", "p", "h", 0};
  EXPECT_EQ(apply_template(testing::mnli_spec(), pair), "p ? [MASK] , h");
}

TEST(ApplyTemplateTest, UnusedSecondSentenceIgnoredAndMissingOneRejected) {
  const Example with_pair{"x", "s", "ignored", 0};
  EXPECT_EQ(apply_template(testing::sst2_spec(), with_pair), "s It was [MASK] .");
  const Example single{"y", "p", std::nullopt, 0};
  try {
    apply_template(testing::mnli_spec(), single);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::template_syntax);
  }
}

TEST(ApplyTemplateTest, PlaceholdersInsideSentencesAreVerbatim) {
  const Example ex{"x", "see <S2> here", std::nullopt, 0};
  EXPECT_EQ(apply_template(testing::sst2_spec(), ex), "see <S2> here It was [MASK] .");
  const Example masked{"y", "a [MASK] b", std::nullopt, 0};
  EXPECT_THROW(apply_template(testing::sst2_spec(), masked), Error);
}

TEST(ApplyTemplateTest, InjectiveOnDistinctSentences) {
  std::set<std::string> prompts;
  for (int i = 0; i < 500; ++i) {
    prompts.insert(apply_template(testing::sst2_spec(), {"x", "s" + std::to_string(i), std::nullopt, 0}));
  }
  EXPECT_EQ(prompts.size(), 500u);
}

}  // namespace
}  // namespace amulap
