#include "amulap/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "amulap/error.hpp"
#include "amulap/io.hpp"

namespace amulap {

namespace {

void check_lengths(std::span<const ClassId> pred, std::span<const ClassId> gold) {
  if (pred.size() != gold.size()) {
    fail(ErrorKind::shape, "prediction and gold lengths differ (" + std::to_string(pred.size()) +
                               " vs " + std::to_string(gold.size()) + ")");
  }
  if (pred.empty()) fail(ErrorKind::shape, "metric over zero examples");
}

struct Confusion {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const ClassId> pred, std::span<const ClassId> gold, ClassId positive) {
  Confusion m;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive;
    const bool g = gold[i] == positive;
    if (p && g) m.tp += 1;
    else if (p) m.fp += 1;
    else if (g) m.fn += 1;
    else m.tn += 1;
  }
  return m;
}

void check_binary(std::span<const ClassId> values) {
  for (ClassId v : values) {
    if (v > 1) fail(ErrorKind::validation, "binary metric given class " + std::to_string(v));
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

double accuracy(std::span<const ClassId> pred, std::span<const ClassId> gold) {
  check_lengths(pred, gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

double f1_binary(std::span<const ClassId> pred, std::span<const ClassId> gold, ClassId positive) {
  check_lengths(pred, gold);
  const Confusion m = confusion(pred, gold, positive);
  const double precision = m.tp + m.fp > 0 ? m.tp / (m.tp + m.fp) : 0.0;
  const double recall = m.tp + m.fn > 0 ? m.tp / (m.tp + m.fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double matthews(std::span<const ClassId> pred, std::span<const ClassId> gold) {
  check_lengths(pred, gold);
  check_binary(pred);
  check_binary(gold);
  const Confusion m = confusion(pred, gold, 1);
  const double denom = (m.tp + m.fp) * (m.tp + m.fn) * (m.tn + m.fp) * (m.tn + m.fn);
  if (denom == 0.0) return 0.0;
  return (m.tp * m.tn - m.fp * m.fn) / std::sqrt(denom);
}

double evaluate_metric(const TaskSpec& spec, std::span<const ClassId> pred, std::span<const ClassId> gold) {
  switch (spec.metric) {
    case Metric::accuracy: return accuracy(pred, gold);
    case Metric::f1: return f1_binary(pred, gold, spec.positive_class.value_or(1));
    case Metric::matthews: return matthews(pred, gold);
  }
  return accuracy(pred, gold);
}

EvalReport aggregate(std::vector<std::pair<std::uint64_t, double>> per_seed, std::string metric_name) {
  if (per_seed.empty()) fail(ErrorKind::arity, "cannot aggregate zero runs");
  EvalReport r;
  r.per_seed = std::move(per_seed);
  r.metric_name = std::move(metric_name);
  const double n = static_cast<double>(r.per_seed.size());
  double sum = 0.0;
  for (const auto& [seed, v] : r.per_seed) sum += v;
  r.mean = sum / n;
  double sq = 0.0;
  for (const auto& [seed, v] : r.per_seed) sq += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(sq / n);
  return r;
}

std::string format_report_tsv(const EvalReport& report) {
  std::string out = "seed\t" + (report.metric_name.empty() ? std::string("value") : report.metric_name) + "\n";
  for (const auto& [seed, v] : report.per_seed) out += std::to_string(seed) + '\t' + format_double(v) + '\n';
  out += "mean\t" + format_double(report.mean) + '\n';
  out += "std\t" + format_double(report.std) + '\n';
  return out;
}

EvalReport parse_report_tsv(std::string_view text) {
  std::vector<std::pair<std::uint64_t, double>> rows;
  std::string metric;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    if (raw.empty()) continue;
    const auto fields = io::split(raw, '\t');
    if (fields.size() != 2) fail(ErrorKind::parse, "report line " + std::to_string(line_no) + ": expected 2 fields");
    if (line_no == 1) {
      metric = fields[1] == "value" ? "" : fields[1];
      continue;
    }
    if (fields[0] == "mean" || fields[0] == "std") continue;
    try {
      rows.emplace_back(std::stoull(fields[0]), std::stod(fields[1]));
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, "report line " + std::to_string(line_no) + ": bad number");
    }
  }
  return aggregate(std::move(rows), metric);
}

std::string format_report_cell(const EvalReport& report) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f (%.1f)", report.mean * 100.0, report.std * 100.0);
  return buf;
}

}  // namespace amulap
