#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "amulap/data.hpp"

namespace amulap {

double accuracy(std::span<const ClassId> pred, std::span<const ClassId> gold);

// F1 on `positive`; 0 when precision + recall is 0.
double f1_binary(std::span<const ClassId> pred, std::span<const ClassId> gold, ClassId positive);

// Matthews correlation with class 1 as positive; 0 when any marginal is 0.
double matthews(std::span<const ClassId> pred, std::span<const ClassId> gold);

// The task's metric, in [0, 1] (or [-1, 1] for Matthews).
double evaluate_metric(const TaskSpec& spec, std::span<const ClassId> pred, std::span<const ClassId> gold);

struct EvalReport {
  std::vector<std::pair<std::uint64_t, double>> per_seed;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::string metric_name;
};

EvalReport aggregate(std::vector<std::pair<std::uint64_t, double>> per_seed, std::string metric_name = {});

// `seed\tvalue` rows followed by `mean` and `std` rows.
std::string format_report_tsv(const EvalReport& report);
EvalReport parse_report_tsv(std::string_view text);

// "86.9 (1.6)": metric scaled to percent, one decimal place.
std::string format_report_cell(const EvalReport& report);

}  // namespace amulap
