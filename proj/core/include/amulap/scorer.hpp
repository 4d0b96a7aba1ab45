#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "amulap/data.hpp"
#include "amulap/dist_store.hpp"
#include "amulap/mapping.hpp"

namespace amulap {

struct Prediction {
  std::vector<double> class_scores;
  ClassId predicted = 0;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Index of the largest score; the lowest index wins ties.
ClassId argmax_lowest(std::span<const double> scores);

// class_scores[i] = sum of probs[v] over v in S(y_i), accumulated in double.
Prediction score(const LabelMapping& mapping, std::span<const float> probs);

struct ScoredExample {
  std::string example_id;
  Prediction prediction;

  friend bool operator==(const ScoredExample&, const ScoredExample&) = default;
};

// One prediction per record, in record order.
std::vector<ScoredExample> predict_batch(const LabelMapping& mapping, const DistributionDump& dump);

// `example_id\tpredicted_class\tscore_0\tscore_1...` with a header row;
// predicted_class is the class name and scores round-trip exactly.
std::string format_predictions(std::span<const ScoredExample> predictions, const TaskSpec& spec);
// Accepts the class name or index in the predicted_class column.
std::vector<ScoredExample> parse_predictions(std::string_view text, const TaskSpec& spec);
void write_predictions(const std::filesystem::path& path, std::span<const ScoredExample> predictions,
                       const TaskSpec& spec);
std::vector<ScoredExample> read_predictions(const std::filesystem::path& path, const TaskSpec& spec);

}  // namespace amulap
