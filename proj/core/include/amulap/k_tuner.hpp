#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amulap/data.hpp"
#include "amulap/dist_store.hpp"
#include "amulap/mapping.hpp"

namespace amulap {

// {1, 2, 4, ..., 1024}: label-set sizes tried when the LM is frozen.
std::vector<std::size_t> default_k_candidates();
// {1, 2, 4, 8, 16}: the reduced space used with prompt-based fine-tuning.
std::vector<std::size_t> finetune_k_candidates();

// How a mapping is produced for a given k.
struct SelectorConfig {
  Method method = Method::amulap;
  std::uint64_t seed = 0;  // used by Method::random
  SelectionOptions options;
  // Auto-L ranks pruned assignments by zero-shot accuracy on this dump; for
  // Auto-L, k is the pruned candidate-set size and the table holds summed
  // log-likelihoods.
  const DistributionDump* autol_train = nullptr;
  AssignmentSearchOptions autol_search;
};

LabelMapping build_mapping(const ClassScoreTable& table, std::size_t k, const SelectorConfig& config);

struct KSearchTrace {
  std::vector<std::size_t> candidates;
  std::vector<double> dev_scores;
  std::size_t chosen_k = 0;
  std::string tuned_on;  // name of the split the scores came from
};

struct KSearchResult {
  LabelMapping mapping;
  KSearchTrace trace;
};

// Best score wins; among equal scores the largest k wins.
std::size_t choose_largest_best_k(std::span<const std::size_t> candidates, std::span<const double> scores);

// Evaluates spec.metric on `dev_dump` for every candidate k and returns the
// mapping at the chosen k. For every method except Auto-L, the k_max mapping
// is built once and smaller k read off its prefixes with running class sums.
KSearchResult search_k(const ClassScoreTable& table, const DistributionDump& dev_dump,
                       std::span<const std::size_t> candidates, const TaskSpec& spec,
                       const SelectorConfig& config, std::string tuned_on = "dev");

std::string format_trace(const KSearchTrace& trace);
KSearchTrace parse_trace(std::string_view text);

}  // namespace amulap
