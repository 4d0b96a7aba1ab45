#include "amulap/k_tuner.hpp"

#include <charconv>

#include "amulap/error.hpp"
#include "amulap/io.hpp"
#include "amulap/metrics.hpp"
#include "amulap/scorer.hpp"

namespace amulap {

namespace {

bool has_prefix_structure(Method method) {
  return method == Method::amulap || method == Method::amulap_no_dedup || method == Method::random ||
         method == Method::external;
}

std::vector<ClassId> gold_of(const DistributionDump& dump) {
  std::vector<ClassId> gold;
  gold.reserve(dump.records.size());
  for (const auto& r : dump.records) gold.push_back(r.gold);
  return gold;
}

double evaluate_mapping(const LabelMapping& mapping, const DistributionDump& dump, const TaskSpec& spec,
                        std::span<const ClassId> gold) {
  std::vector<ClassId> pred;
  pred.reserve(dump.records.size());
  for (const auto& p : predict_batch(mapping, dump)) pred.push_back(p.prediction.predicted);
  return evaluate_metric(spec, pred, gold);
}

// Per candidate k, the predictions of mapping.truncated(k) on every record.
// Sums are accumulated in set order, matching score() term for term.
std::vector<std::vector<ClassId>> prefix_predictions(const LabelMapping& mapping,
                                                     const DistributionDump& dump,
                                                     std::span<const std::size_t> candidates) {
  if (mapping.vocab_hash && *mapping.vocab_hash != dump.vocab_hash) {
    fail(ErrorKind::compatibility, "mapping vocabulary differs from dump vocabulary");
  }
  const std::size_t classes = mapping.num_classes();
  for (std::size_t c = 0; c < classes; ++c) {
    if (mapping.sets[c].empty()) fail(ErrorKind::scoring, "class " + std::to_string(c) + " has an empty label set");
    for (TokenId t : mapping.sets[c]) {
      if (t >= dump.vocab_size) fail(ErrorKind::compatibility, "token id outside the dump vocabulary");
    }
  }
  std::vector<std::vector<ClassId>> preds(candidates.size(), std::vector<ClassId>(dump.records.size()));
  std::vector<double> running(classes);
  std::vector<std::size_t> used(classes);
  std::vector<double> snapshot(classes);
  for (std::size_t r = 0; r < dump.records.size(); ++r) {
    const auto& probs = dump.records[r].probs;
    std::fill(running.begin(), running.end(), 0.0);
    std::fill(used.begin(), used.end(), 0);
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
      for (std::size_t c = 0; c < classes; ++c) {
        const auto& set = mapping.sets[c];
        const std::size_t upto = std::min(candidates[ci], set.size());
        for (; used[c] < upto; ++used[c]) running[c] += static_cast<double>(probs[set[used[c]]]);
        snapshot[c] = running[c];
      }
      preds[ci][r] = argmax_lowest(snapshot);
    }
  }
  return preds;
}

std::string at_k(std::size_t k) { return " (k=" + std::to_string(k) + ")"; }

}  // namespace

std::vector<std::size_t> default_k_candidates() {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k <= 1024; k *= 2) out.push_back(k);
  return out;
}

std::vector<std::size_t> finetune_k_candidates() { return {1, 2, 4, 8, 16}; }

LabelMapping build_mapping(const ClassScoreTable& table, std::size_t k, const SelectorConfig& config) {
  switch (config.method) {
    case Method::amulap:
    case Method::external: {
      auto m = select_amulap(table, k, config.options);
      m.method = config.method;
      return m;
    }
    case Method::amulap_no_dedup: return select_no_dedup(table, k, config.options);
    case Method::random: {
      auto m = select_random(table.vocab_size(), table.num_classes(), k, config.seed);
      m.vocab_hash = table.vocab_hash;
      return m;
    }
    case Method::autol: {
      if (!config.autol_train) fail(ErrorKind::config, "Auto-L selection needs the training dump");
      const auto candidates = autol_prune(table, k, config.options);
      auto search = config.autol_search;
      search.top_n = 1;
      auto ranked = autol_zeroshot_search(candidates, *config.autol_train, search);
      if (ranked.empty()) fail(ErrorKind::search, "Auto-L search returned no assignment");
      return std::move(ranked.front().mapping);
    }
    case Method::manual:
      fail(ErrorKind::config, "manual mappings are read from a file, not selected");
  }
  fail(ErrorKind::config, "unknown selection method");
}

std::size_t choose_largest_best_k(std::span<const std::size_t> candidates, std::span<const double> scores) {
  if (candidates.empty() || candidates.size() != scores.size()) {
    fail(ErrorKind::arity, "need one score per k candidate");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (scores[i] >= scores[best]) best = i;
  }
  return candidates[best];
}

KSearchResult search_k(const ClassScoreTable& table, const DistributionDump& dev_dump,
                       std::span<const std::size_t> candidates, const TaskSpec& spec,
                       const SelectorConfig& config, std::string tuned_on) {
  if (candidates.empty()) fail(ErrorKind::config, "k candidate list is empty");
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == 0 || (i > 0 && candidates[i] <= candidates[i - 1])) {
      fail(ErrorKind::config, "k candidates must be positive and strictly ascending");
    }
  }
  if (dev_dump.records.empty()) fail(ErrorKind::coverage, "k search needs at least one record");

  KSearchResult result;
  result.trace.candidates.assign(candidates.begin(), candidates.end());
  result.trace.tuned_on = std::move(tuned_on);
  const auto gold = gold_of(dev_dump);

  if (has_prefix_structure(config.method)) {
    const std::size_t k_max = candidates.back();
    LabelMapping full;
    try {
      full = build_mapping(table, k_max, config);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + at_k(k_max));
    }
    const auto preds = prefix_predictions(full, dev_dump, candidates);
    for (const auto& p : preds) result.trace.dev_scores.push_back(evaluate_metric(spec, p, gold));
    result.trace.chosen_k = choose_largest_best_k(candidates, result.trace.dev_scores);
    result.mapping = full.truncated(result.trace.chosen_k);
    return result;
  }

  std::vector<LabelMapping> mappings;
  for (std::size_t k : candidates) {
    try {
      mappings.push_back(build_mapping(table, k, config));
      result.trace.dev_scores.push_back(evaluate_mapping(mappings.back(), dev_dump, spec, gold));
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + at_k(k));
    }
  }
  result.trace.chosen_k = choose_largest_best_k(candidates, result.trace.dev_scores);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == result.trace.chosen_k) result.mapping = std::move(mappings[i]);
  }
  return result;
}

std::string format_trace(const KSearchTrace& trace) {
  std::string out = "# tuned_on=" + trace.tuned_on + "\nk\tdev_score\n";
  char buf[32];
  for (std::size_t i = 0; i < trace.candidates.size(); ++i) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, trace.dev_scores.at(i));
    (void)ec;
    out += std::to_string(trace.candidates[i]) + '\t' + std::string(buf, ptr) + '\n';
  }
  out += "chosen_k\t" + std::to_string(trace.chosen_k) + '\n';
  return out;
}

KSearchTrace parse_trace(std::string_view text) {
  KSearchTrace trace;
  bool have_chosen = false;
  std::size_t line_no = 0;
  for (const auto& line : io::split(text, '\n')) {
    ++line_no;
    if (line.empty() || line == "k\tdev_score") continue;
    if (line.starts_with("# tuned_on=")) {
      trace.tuned_on = line.substr(11);
      continue;
    }
    const auto fields = io::split(line, '\t');
    if (fields.size() != 2) fail(ErrorKind::parse, "trace line " + std::to_string(line_no) + ": expected 2 fields");
    try {
      if (fields[0] == "chosen_k") {
        trace.chosen_k = std::stoull(fields[1]);
        have_chosen = true;
      } else {
        trace.candidates.push_back(std::stoull(fields[0]));
        trace.dev_scores.push_back(std::stod(fields[1]));
      }
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, "trace line " + std::to_string(line_no) + ": bad number");
    }
  }
  if (!have_chosen) fail(ErrorKind::parse, "trace lacks chosen_k footer");
  return trace;
}

}  // namespace amulap
