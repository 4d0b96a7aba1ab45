#include "amulap/scorer.hpp"

#include <charconv>
#include <cmath>

#include "amulap/error.hpp"
#include "amulap/io.hpp"

namespace amulap {

ClassId argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return static_cast<ClassId>(best);
}

Prediction score(const LabelMapping& mapping, std::span<const float> probs) {
  if (mapping.sets.empty()) fail(ErrorKind::scoring, "mapping has no classes");
  Prediction p;
  p.class_scores.resize(mapping.sets.size());
  for (std::size_t c = 0; c < mapping.sets.size(); ++c) {
    const auto& set = mapping.sets[c];
    if (set.empty()) fail(ErrorKind::scoring, "class " + std::to_string(c) + " has an empty label set");
    double sum = 0.0;
    for (TokenId t : set) {
      if (t >= probs.size()) {
        fail(ErrorKind::compatibility, "token id " + std::to_string(t) + " outside a vocabulary of " +
                                           std::to_string(probs.size()));
      }
      sum += static_cast<double>(probs[t]);
    }
    p.class_scores[c] = sum;
  }
  p.predicted = argmax_lowest(p.class_scores);
  return p;
}

std::vector<ScoredExample> predict_batch(const LabelMapping& mapping, const DistributionDump& dump) {
  if (mapping.vocab_hash && *mapping.vocab_hash != dump.vocab_hash) {
    fail(ErrorKind::compatibility, "mapping vocabulary " + to_hex(*mapping.vocab_hash) +
                                       " differs from dump vocabulary " + to_hex(dump.vocab_hash));
  }
  std::vector<ScoredExample> out;
  out.reserve(dump.records.size());
  for (const auto& rec : dump.records) {
    if (rec.probs.size() != dump.vocab_size) {
      fail(ErrorKind::shape, "record '" + rec.example_id + "' does not match |V|");
    }
    out.push_back({rec.example_id, score(mapping, rec.probs)});
  }
  return out;
}

std::string format_predictions(std::span<const ScoredExample> predictions, const TaskSpec& spec) {
  std::string out = "example_id\tpredicted_class";
  for (std::size_t c = 0; c < spec.num_classes(); ++c) out += "\tscore_" + std::to_string(c);
  out += '\n';
  char buf[32];
  for (const auto& p : predictions) {
    if (p.prediction.class_scores.size() != spec.num_classes()) {
      fail(ErrorKind::shape, "prediction for '" + p.example_id + "' has the wrong number of scores");
    }
    out += p.example_id;
    out += '\t';
    out += spec.classes.at(p.prediction.predicted);
    for (double s : p.prediction.class_scores) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, s);
      (void)ec;
      out += '\t';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

std::vector<ScoredExample> parse_predictions(std::string_view text, const TaskSpec& spec) {
  std::vector<ScoredExample> out;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = io::split(line, '\t');
    if (line_no == 1 && fields[0] == "example_id") continue;
    const std::string ref = "predictions line " + std::to_string(line_no);
    if (fields.size() != 2 + spec.num_classes()) {
      fail(ErrorKind::parse, ref + ": expected " + std::to_string(2 + spec.num_classes()) + " fields");
    }
    ScoredExample ex;
    ex.example_id = fields[0];
    try {
      ex.prediction.predicted = resolve_label(spec, fields[1]);
    } catch (const Error& e) {
      fail(ErrorKind::label, ref + ": " + e.what());
    }
    for (std::size_t f = 2; f < fields.size(); ++f) {
      double v = 0.0;
      const auto& s = fields[f];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        fail(ErrorKind::parse, ref + ": bad score '" + s + "'");
      }
      ex.prediction.class_scores.push_back(v);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const ScoredExample> predictions,
                       const TaskSpec& spec) {
  io::write_file_atomic(path, format_predictions(predictions, spec));
}

std::vector<ScoredExample> read_predictions(const std::filesystem::path& path, const TaskSpec& spec) {
  try {
    return parse_predictions(io::read_text_file(path), spec);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::path) throw;
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
}

}  // namespace amulap
