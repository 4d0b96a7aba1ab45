#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amulap/data.hpp"
#include "amulap/dist_store.hpp"
#include "amulap/vocab.hpp"

namespace amulap {

enum class Method { amulap, amulap_no_dedup, random, autol, manual, external };

std::string_view to_string(Method method);
// Accepts the serialized names and the CLI spellings ("no-dedup").
Method parse_method(std::string_view name);

// One-to-many label mapping: sets[i] is S(y_i), best candidate first.
struct LabelMapping {
  std::vector<std::vector<TokenId>> sets;
  std::size_t k = 0;
  Method method = Method::amulap;
  std::optional<std::uint64_t> seed;
  // exhausted[i]: sets[i] is shorter than k because its candidate pool ran out.
  std::vector<bool> exhausted;
  std::optional<VocabDigest> vocab_hash;

  std::size_t num_classes() const noexcept { return sets.size(); }

  // Keeps the first min(k, size) tokens of every set.
  LabelMapping truncated(std::size_t k) const;

  friend bool operator==(const LabelMapping&, const LabelMapping&) = default;
};

// Candidate cells S~(y_i); each holds token ids in ascending order.
struct CandidatePartition {
  std::vector<std::vector<TokenId>> assigned;
};

// Every token goes to argmax_i z_i[v]; ties go to the lowest class index.
CandidatePartition partition_vocab(const ClassScoreTable& table);

struct SelectionOptions {
  // Tokens never selected (e.g. sequence markers). Empty by default.
  std::vector<TokenId> excluded;
};

// Dedup selection: top-k of each partition cell by z_i (ties: lower token id).
// An empty cell is a selection error; a short cell sets the exhausted flag.
LabelMapping select_amulap(const ClassScoreTable& table, std::size_t k,
                           const SelectionOptions& options = {});

// Independent top-k of every z_i over the whole vocabulary; sets may overlap.
LabelMapping select_no_dedup(const ClassScoreTable& table, std::size_t k,
                             const SelectionOptions& options = {});

// k * classes distinct ids drawn uniformly without replacement (partial
// Fisher-Yates on SplitRng(seed)); draw j goes to class j % classes. Sets keep
// draw order, so smaller k yields prefixes of larger k.
LabelMapping select_random(std::size_t vocab_size, std::size_t classes, std::size_t k,
                           std::uint64_t seed);

// Auto-L pruning: per class, top-k tokens of a summed log-likelihood table.
// Sets may overlap.
std::vector<std::vector<TokenId>> autol_prune(const ClassScoreTable& log_table, std::size_t k,
                                              const SelectionOptions& options = {});

inline constexpr std::uint64_t kDefaultAssignmentCap = 1'000'000;

struct AssignmentSearchOptions {
  std::size_t top_n = 1;
  std::uint64_t cap = kDefaultAssignmentCap;
  // 0 forbids beam search; the search then fails when the space exceeds cap.
  std::size_t beam_width = 0;
};

struct RankedAssignment {
  LabelMapping mapping;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

// Ranks single-token-per-class assignments drawn from `candidates` by
// zero-shot accuracy on `dump` (order: accuracy desc, token-id tuple asc).
std::vector<RankedAssignment> autol_zeroshot_search(
    std::span<const std::vector<TokenId>> candidates, const DistributionDump& dump,
    const AssignmentSearchOptions& options);

// `# method=<m> k=<k> seed=<s|none>` header, then `<class>\t<token>...` per class.
std::string format_mapping(const LabelMapping& mapping, const TaskSpec& spec, const Vocabulary& vocab);
LabelMapping parse_mapping(std::string_view text, const TaskSpec& spec, const Vocabulary& vocab);
void write_mapping(const std::filesystem::path& path, const LabelMapping& mapping,
                   const TaskSpec& spec, const Vocabulary& vocab);
LabelMapping read_mapping(const std::filesystem::path& path, const TaskSpec& spec,
                          const Vocabulary& vocab);

}  // namespace amulap
