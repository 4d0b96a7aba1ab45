#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amulap/vocab.hpp"

namespace amulap {

enum class Metric { accuracy, f1, matthews };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

inline constexpr std::string_view kMaskPlaceholder = "[MASK]";
inline constexpr std::string_view kFirstSentencePlaceholder = "<S1>";
inline constexpr std::string_view kSecondSentencePlaceholder = "<S2>";

struct TaskSpec {
  std::string task_name;
  std::vector<std::string> classes;
  std::string template_text;
  Metric metric = Metric::accuracy;
  std::optional<ClassId> positive_class;

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::optional<ClassId> class_index(std::string_view name) const;
  bool needs_second_sentence() const;

  // Throws config/template errors when the invariants do not hold.
  void validate() const;
};

// Key-value file, one `key = value` per line, '#' comments. Keys: task_name,
// classes (comma separated, index order), template, metric, positive_class.
TaskSpec parse_task_spec(std::string_view text);
TaskSpec load_task_spec(const std::filesystem::path& path);
std::string format_task_spec(const TaskSpec& spec);

struct Example {
  std::string id;
  std::string sentence1;
  std::optional<std::string> sentence2;
  ClassId gold = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

// Accepts a class name or a decimal class index; throws label error otherwise.
ClassId resolve_label(const TaskSpec& spec, std::string_view raw);

// TSV with a header row (`sentence1`, optional `sentence2`, `label`, optional
// `id`) or JSONL with the same keys, picked by the .jsonl/.json extension.
// Without an `id` column the zero-based data row index is used.
std::vector<Example> load_dataset(const std::filesystem::path& path, const TaskSpec& spec);
std::vector<Example> parse_tsv_dataset(std::string_view text, const TaskSpec& spec);
std::vector<Example> parse_jsonl_dataset(std::string_view text, const TaskSpec& spec);
void write_jsonl_dataset(const std::filesystem::path& path, std::span<const Example> examples,
                         const TaskSpec& spec);

struct FewShotSplit {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<Example> train;
  std::vector<Example> dev;

  friend bool operator==(const FewShotSplit&, const FewShotSplit&) = default;
};

// Per class (in class index order) the pool members are shuffled with one
// SplitRng stream seeded by `seed`; the first n go to train, the next n to dev.
FewShotSplit sample_split(const TaskSpec& spec, std::span<const Example> pool, std::size_t n,
                          std::uint64_t seed);

std::string format_split(const FewShotSplit& split, const TaskSpec& spec);
FewShotSplit parse_split(std::string_view text, const TaskSpec& spec);
void write_split(const std::filesystem::path& path, const FewShotSplit& split, const TaskSpec& spec);
FewShotSplit read_split(const std::filesystem::path& path, const TaskSpec& spec);

std::string apply_template(const TaskSpec& spec, const Example& example);

}  // namespace amulap
