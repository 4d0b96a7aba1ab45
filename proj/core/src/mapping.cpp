#include "amulap/mapping.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "amulap/error.hpp"
#include "amulap/io.hpp"
#include "amulap/rng.hpp"

namespace amulap {

namespace {

void check_table(const ClassScoreTable& table) {
  if (table.num_classes() == 0) fail(ErrorKind::selection, "score table has no classes");
  const std::size_t v = table.vocab_size();
  for (std::size_t c = 0; c < table.num_classes(); ++c) {
    if (table.per_class[c].size() != v) {
      fail(ErrorKind::shape, "score vector of class " + std::to_string(c) + " has length " +
                                 std::to_string(table.per_class[c].size()) + ", expected " +
                                 std::to_string(v));
    }
  }
}

void check_k(std::size_t k) {
  if (k == 0) fail(ErrorKind::selection, "k must be at least 1");
}

std::vector<bool> exclusion_mask(std::size_t vocab_size, const SelectionOptions& options) {
  std::vector<bool> mask(vocab_size, false);
  for (TokenId t : options.excluded) {
    if (t < vocab_size) mask[t] = true;
  }
  return mask;
}

// Highest score first, lower token id on ties.
std::vector<TokenId> top_k_by_score(std::vector<TokenId> candidates, std::span<const double> score,
                                    std::size_t k) {
  const std::size_t take = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                    candidates.end(), [&](TokenId a, TokenId b) {
                      if (score[a] != score[b]) return score[a] > score[b];
                      return a < b;
                    });
  candidates.resize(take);
  return candidates;
}

LabelMapping make_mapping(std::size_t classes, std::size_t k, Method method,
                          const ClassScoreTable* table) {
  LabelMapping m;
  m.sets.resize(classes);
  m.exhausted.assign(classes, false);
  m.k = k;
  m.method = method;
  if (table) m.vocab_hash = table->vocab_hash;
  return m;
}

Method selection_method(const ClassScoreTable& table, Method dedup_method) {
  if (dedup_method == Method::amulap && table.source == ScoreSource::external) return Method::external;
  return dedup_method;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::amulap: return "amulap";
    case Method::amulap_no_dedup: return "amulap_no_dedup";
    case Method::random: return "random";
    case Method::autol: return "autol";
    case Method::manual: return "manual";
    case Method::external: return "external";
  }
  return "amulap";
}

Method parse_method(std::string_view name) {
  if (name == "amulap") return Method::amulap;
  if (name == "amulap_no_dedup" || name == "no-dedup" || name == "no_dedup") return Method::amulap_no_dedup;
  if (name == "random") return Method::random;
  if (name == "autol") return Method::autol;
  if (name == "manual") return Method::manual;
  if (name == "external") return Method::external;
  fail(ErrorKind::config, "unknown method '" + std::string(name) + "'");
}

LabelMapping LabelMapping::truncated(std::size_t new_k) const {
  LabelMapping out = *this;
  out.k = new_k;
  for (std::size_t c = 0; c < out.sets.size(); ++c) {
    if (out.sets[c].size() > new_k) out.sets[c].resize(new_k);
    out.exhausted[c] = out.sets[c].size() < new_k;
  }
  return out;
}

CandidatePartition partition_vocab(const ClassScoreTable& table) {
  check_table(table);
  const std::size_t classes = table.num_classes();
  const std::size_t vocab = table.vocab_size();
  CandidatePartition part;
  part.assigned.resize(classes);
  for (std::size_t v = 0; v < vocab; ++v) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (table.per_class[c][v] > table.per_class[best][v]) best = c;
    }
    part.assigned[best].push_back(static_cast<TokenId>(v));
  }
  return part;
}

LabelMapping select_amulap(const ClassScoreTable& table, std::size_t k,
                           const SelectionOptions& options) {
  check_k(k);
  CandidatePartition part = partition_vocab(table);
  const auto excluded = exclusion_mask(table.vocab_size(), options);
  LabelMapping m = make_mapping(table.num_classes(), k, selection_method(table, Method::amulap), &table);
  for (std::size_t c = 0; c < table.num_classes(); ++c) {
    auto& cell = part.assigned[c];
    std::erase_if(cell, [&](TokenId t) { return excluded[t]; });
    if (cell.empty()) {
      fail(ErrorKind::selection, "class " + std::to_string(c) + " has an empty candidate set");
    }
    m.exhausted[c] = cell.size() < k;
    m.sets[c] = top_k_by_score(std::move(cell), table.per_class[c], k);
  }
  return m;
}

LabelMapping select_no_dedup(const ClassScoreTable& table, std::size_t k,
                             const SelectionOptions& options) {
  check_k(k);
  check_table(table);
  const auto excluded = exclusion_mask(table.vocab_size(), options);
  std::vector<TokenId> all;
  for (std::size_t v = 0; v < table.vocab_size(); ++v) {
    if (!excluded[v]) all.push_back(static_cast<TokenId>(v));
  }
  if (all.empty()) fail(ErrorKind::selection, "no candidate tokens left after exclusions");
  LabelMapping m = make_mapping(table.num_classes(), k, Method::amulap_no_dedup, &table);
  for (std::size_t c = 0; c < table.num_classes(); ++c) {
    m.exhausted[c] = all.size() < k;
    m.sets[c] = top_k_by_score(all, table.per_class[c], k);
  }
  return m;
}

LabelMapping select_random(std::size_t vocab_size, std::size_t classes, std::size_t k,
                           std::uint64_t seed) {
  check_k(k);
  if (classes == 0) fail(ErrorKind::selection, "no classes");
  if (k > vocab_size / classes) {
    fail(ErrorKind::capacity, "vocabulary of " + std::to_string(vocab_size) + " tokens cannot supply " +
                                  std::to_string(k) + " tokens to each of " + std::to_string(classes) +
                                  " classes");
  }
  std::vector<TokenId> ids(vocab_size);
  std::iota(ids.begin(), ids.end(), TokenId{0});
  SplitRng rng(seed);
  LabelMapping m = make_mapping(classes, k, Method::random, nullptr);
  m.seed = seed;
  const std::size_t draws = k * classes;
  for (std::size_t j = 0; j < draws; ++j) {
    const auto r = j + static_cast<std::size_t>(rng.below(vocab_size - j));
    std::swap(ids[j], ids[r]);
    m.sets[j % classes].push_back(ids[j]);
  }
  return m;
}

std::vector<std::vector<TokenId>> autol_prune(const ClassScoreTable& log_table, std::size_t k,
                                              const SelectionOptions& options) {
  check_k(k);
  check_table(log_table);
  const auto excluded = exclusion_mask(log_table.vocab_size(), options);
  std::vector<TokenId> all;
  for (std::size_t v = 0; v < log_table.vocab_size(); ++v) {
    if (!excluded[v]) all.push_back(static_cast<TokenId>(v));
  }
  std::vector<std::vector<TokenId>> out;
  out.reserve(log_table.num_classes());
  for (const auto& row : log_table.per_class) out.push_back(top_k_by_score(all, row, k));
  return out;
}

namespace {

struct Candidate {
  std::vector<TokenId> tokens;
  std::size_t correct = 0;
};

// a ranks ahead of b.
bool ranks_ahead(const Candidate& a, const Candidate& b) {
  if (a.correct != b.correct) return a.correct > b.correct;
  return a.tokens < b.tokens;
}

class TopN {
 public:
  explicit TopN(std::size_t n) : n_(n) {}

  void offer(Candidate c) {
    if (n_ == 0) return;
    if (heap_.size() < n_) {
      heap_.push_back(std::move(c));
      std::push_heap(heap_.begin(), heap_.end(), ranks_ahead);
    } else if (ranks_ahead(c, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), ranks_ahead);
      heap_.back() = std::move(c);
      std::push_heap(heap_.begin(), heap_.end(), ranks_ahead);
    }
  }

  std::vector<Candidate> sorted() && {
    std::sort(heap_.begin(), heap_.end(), ranks_ahead);
    return std::move(heap_);
  }

 private:
  std::size_t n_;
  std::vector<Candidate> heap_;  // worst-ranked on top
};

// probs_at[r][c][j]: probability of candidate j of class c in record r.
using CandidateProbs = std::vector<std::vector<std::vector<float>>>;

// Correct predictions among records with gold < `classes_used`, predicting over
// the first `classes_used` classes only (the full count when it equals |Y|).
std::size_t count_correct(const CandidateProbs& probs_at, std::span<const ClassId> gold,
                          std::span<const std::size_t> choice, std::size_t classes_used) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    if (gold[r] >= classes_used) continue;
    std::size_t best = 0;
    float best_p = probs_at[r][0][choice[0]];
    for (std::size_t c = 1; c < classes_used; ++c) {
      const float p = probs_at[r][c][choice[c]];
      if (p > best_p) {
        best_p = p;
        best = c;
      }
    }
    if (best == gold[r]) ++correct;
  }
  return correct;
}

}  // namespace

std::vector<RankedAssignment> autol_zeroshot_search(
    std::span<const std::vector<TokenId>> candidates, const DistributionDump& dump,
    const AssignmentSearchOptions& options) {
  const std::size_t classes = candidates.size();
  if (classes == 0) fail(ErrorKind::search, "no classes to assign");
  if (dump.records.empty()) fail(ErrorKind::search, "no records to score assignments on");

  // Lexicographic tie order needs each class's candidates in ascending id order.
  std::vector<std::vector<TokenId>> cands(candidates.begin(), candidates.end());
  std::uint64_t space = 1;
  bool over_cap = false;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& list = cands[c];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    if (list.empty()) fail(ErrorKind::search, "class " + std::to_string(c) + " has no candidates");
    for (TokenId t : list) {
      if (t >= dump.vocab_size) {
        fail(ErrorKind::compatibility, "candidate token " + std::to_string(t) + " outside the dump vocabulary");
      }
    }
    if (!over_cap) {
      if (space > options.cap / list.size()) over_cap = true;
      else space *= list.size();
    }
  }
  over_cap = over_cap || space > options.cap;
  if (over_cap && options.beam_width == 0) {
    fail(ErrorKind::search, "assignment space exceeds cap of " + std::to_string(options.cap) +
                                " and beam search was not enabled");
  }

  std::vector<ClassId> gold;
  CandidateProbs probs_at(dump.records.size());
  for (std::size_t r = 0; r < dump.records.size(); ++r) {
    const auto& rec = dump.records[r];
    if (rec.gold >= classes) {
      fail(ErrorKind::validation, "record '" + rec.example_id + "' has class outside the assignment");
    }
    gold.push_back(rec.gold);
    probs_at[r].resize(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      for (TokenId t : cands[c]) probs_at[r][c].push_back(rec.probs[t]);
    }
  }

  auto tokens_of = [&](std::span<const std::size_t> choice) {
    std::vector<TokenId> tokens(choice.size());
    for (std::size_t c = 0; c < choice.size(); ++c) tokens[c] = cands[c][choice[c]];
    return tokens;
  };

  std::vector<Candidate> ranked;
  if (!over_cap) {
    TopN best(options.top_n);
    std::vector<std::size_t> choice(classes, 0);
    for (;;) {
      best.offer({tokens_of(choice), count_correct(probs_at, gold, choice, classes)});
      bool advanced = false;
      for (std::size_t c = classes; c-- > 0;) {
        if (++choice[c] < cands[c].size()) {
          advanced = true;
          break;
        }
        choice[c] = 0;
      }
      if (!advanced) break;
    }
    ranked = std::move(best).sorted();
  } else {
    // Beam over classes in index order; a partial assignment of classes 0..j is
    // scored on the records whose gold class it covers.
    struct Partial {
      std::vector<std::size_t> choice;
      Candidate rank;
    };
    std::vector<Partial> beam{Partial{}};
    for (std::size_t j = 0; j < classes; ++j) {
      std::vector<Partial> next;
      for (const auto& p : beam) {
        for (std::size_t i = 0; i < cands[j].size(); ++i) {
          Partial q;
          q.choice = p.choice;
          q.choice.push_back(i);
          q.rank.tokens = tokens_of(q.choice);
          q.rank.correct = count_correct(probs_at, gold, q.choice, j + 1);
          next.push_back(std::move(q));
        }
      }
      std::sort(next.begin(), next.end(),
                [](const Partial& a, const Partial& b) { return ranks_ahead(a.rank, b.rank); });
      if (next.size() > options.beam_width) next.resize(options.beam_width);
      beam = std::move(next);
    }
    for (auto& p : beam) {
      if (ranked.size() == options.top_n) break;
      ranked.push_back(std::move(p.rank));
    }
  }

  std::vector<RankedAssignment> out;
  out.reserve(ranked.size());
  for (auto& cand : ranked) {
    RankedAssignment a;
    a.mapping.k = 1;
    a.mapping.method = Method::autol;
    a.mapping.exhausted.assign(classes, false);
    a.mapping.vocab_hash = dump.vocab_hash;
    for (TokenId t : cand.tokens) a.mapping.sets.push_back({t});
    a.correct = cand.correct;
    a.accuracy = static_cast<double>(cand.correct) / static_cast<double>(gold.size());
    out.push_back(std::move(a));
  }
  return out;
}

std::string format_mapping(const LabelMapping& mapping, const TaskSpec& spec, const Vocabulary& vocab) {
  if (mapping.num_classes() != spec.num_classes()) {
    fail(ErrorKind::shape, "mapping has " + std::to_string(mapping.num_classes()) +
                               " classes, task has " + std::to_string(spec.num_classes()));
  }
  std::ostringstream out;
  out << "# method=" << to_string(mapping.method) << " k=" << mapping.k << " seed=";
  if (mapping.seed) out << *mapping.seed;
  else out << "none";
  out << '\n';
  for (std::size_t c = 0; c < mapping.num_classes(); ++c) {
    out << spec.classes[c];
    for (TokenId t : mapping.sets[c]) {
      if (t >= vocab.size()) fail(ErrorKind::compatibility, "token id " + std::to_string(t) + " outside vocabulary");
      out << '\t' << vocab.token(t);
    }
    out << '\n';
  }
  return out.str();
}

LabelMapping parse_mapping(std::string_view text, const TaskSpec& spec, const Vocabulary& vocab) {
  auto lines = io::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || !lines[0].starts_with("# ")) fail(ErrorKind::parse, "mapping: missing header line");

  LabelMapping m;
  bool have_method = false, have_k = false;
  for (const auto& kv : io::split(std::string_view(lines[0]).substr(2), ' ')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorKind::parse, "mapping header: malformed field '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      if (key == "method") {
        m.method = parse_method(value);
        have_method = true;
      } else if (key == "k") {
        m.k = std::stoull(value);
        have_k = true;
      } else if (key == "seed") {
        if (value != "none") m.seed = std::stoull(value);
      } else {
        fail(ErrorKind::parse, "mapping header: unknown key '" + key + "'");
      }
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, "mapping header: bad value for '" + key + "'");
    }
  }
  if (!have_method || !have_k) fail(ErrorKind::parse, "mapping header lacks method or k");

  m.sets.resize(spec.num_classes());
  std::vector<bool> seen(spec.num_classes(), false);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = std::string_view(lines[i]);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = io::split(line, '\t');
    const auto cls = spec.class_index(fields[0]);
    if (!cls) fail(ErrorKind::label, "mapping line " + std::to_string(i + 1) + ": unknown class '" + fields[0] + "'");
    if (seen[*cls]) fail(ErrorKind::parse, "mapping: class '" + fields[0] + "' listed twice");
    seen[*cls] = true;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      const auto id = vocab.id_of(fields[f]);
      if (!id) fail(ErrorKind::compatibility, "mapping line " + std::to_string(i + 1) + ": token '" + fields[f] + "' not in vocabulary");
      m.sets[*cls].push_back(*id);
    }
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) fail(ErrorKind::parse, "mapping: class '" + spec.classes[c] + "' missing");
  }
  m.exhausted.resize(m.sets.size());
  for (std::size_t c = 0; c < m.sets.size(); ++c) m.exhausted[c] = m.sets[c].size() < m.k;
  m.vocab_hash = vocab.digest();
  return m;
}

void write_mapping(const std::filesystem::path& path, const LabelMapping& mapping,
                   const TaskSpec& spec, const Vocabulary& vocab) {
  io::write_file_atomic(path, format_mapping(mapping, spec, vocab));
}

LabelMapping read_mapping(const std::filesystem::path& path, const TaskSpec& spec,
                          const Vocabulary& vocab) {
  try {
    return parse_mapping(io::read_text_file(path), spec, vocab);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::path) throw;
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
}

}  // namespace amulap
