#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amulap/vocab.hpp"

namespace amulap {

inline constexpr double kNormalizationTolerance = 1e-3;
inline constexpr std::uint16_t kDumpFormatVersion = 1;

struct DistributionRecord {
  std::string example_id;
  ClassId gold = 0;
  std::vector<float> probs;

  friend bool operator==(const DistributionRecord&, const DistributionRecord&) = default;
};

// Cached mask-position distributions for one split. Dumps are immutable once
// loaded; in-memory dumps built by tests may hold arbitrary vectors, and
// validate_dump() is what read_dump() enforces.
struct DistributionDump {
  std::uint32_t vocab_size = 0;
  VocabDigest vocab_hash{};
  std::string model_tag;
  std::vector<DistributionRecord> records;

  friend bool operator==(const DistributionDump&, const DistributionDump&) = default;
};

// Throws validation error citing the example id when a record has the wrong
// length, a negative or non-finite entry, or a sum outside 1 +/- tolerance;
// also rejects duplicate example ids.
void validate_dump(const DistributionDump& dump);

// Binary layout (all integers little-endian):
//   "AMLP" | u16 version | u32 |V| | 32-byte vocab SHA-256 |
//   u32 len + model_tag | u32 record count |
//   per record: u32 len + example_id | u16 gold | |V| x f32 probabilities
std::string encode_dump(const DistributionDump& dump);
DistributionDump decode_dump(std::string_view bytes);

void write_dump(const std::filesystem::path& path, const DistributionDump& dump);
// When `expected` is given, a differing vocab hash is a compatibility error.
DistributionDump read_dump(const std::filesystem::path& path,
                           const std::optional<VocabDigest>& expected = std::nullopt);
inline DistributionDump read_dump(const std::filesystem::path& path, const Vocabulary& vocab) {
  return read_dump(path, vocab.digest());
}

// Records whose ids appear in `ids`, in the order of `ids`; a missing id is a
// coverage error.
DistributionDump subset_dump(const DistributionDump& dump, std::span<const std::string> ids);

enum class ScoreSource { probability_mean, log_likelihood_sum, external };

// Per-class statistic over the vocabulary that drives label selection.
struct ClassScoreTable {
  std::vector<std::vector<double>> per_class;
  std::vector<std::size_t> n_per_class;
  std::optional<VocabDigest> vocab_hash;
  ScoreSource source = ScoreSource::probability_mean;

  std::size_t num_classes() const noexcept { return per_class.size(); }
  std::size_t vocab_size() const noexcept { return per_class.empty() ? 0 : per_class.front().size(); }
  // True when entries are not guaranteed non-negative.
  bool non_negativity_waived() const noexcept { return source != ScoreSource::probability_mean; }
};

// z_i[v] = mean over records with gold == i of probs[v], accumulated in double.
ClassScoreTable mean_by_class(const DistributionDump& dump, std::size_t classes);

inline constexpr double kLogProbabilityFloor = 1e-30;

// Per class, sum over its records of log(max(p, floor)); the input to Auto-L pruning.
ClassScoreTable log_likelihood_by_class(const DistributionDump& dump, std::size_t classes);

// Text file: one line per class (class index order) of whitespace-separated
// finite reals, each line exactly `vocab_size` values.
ClassScoreTable ingest_external_scores(const std::filesystem::path& path, std::size_t classes,
                                       std::size_t vocab_size);
ClassScoreTable parse_external_scores(std::string_view text, std::size_t classes,
                                      std::size_t vocab_size);
std::string format_external_scores(const ClassScoreTable& table);

}  // namespace amulap
