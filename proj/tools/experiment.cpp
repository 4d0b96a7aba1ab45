#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <future>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "amulap/error.hpp"
#include "amulap/io.hpp"

namespace amulap::cli {

namespace {

using nlohmann::json;

template <typename T>
std::vector<T> parse_list(std::string_view text, std::string_view what) {
  std::vector<T> out;
  for (const auto& raw : io::split(text, ',')) {
    const auto item = io::trim(raw);
    if (item.empty()) continue;
    T value{};
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (ec != std::errc() || ptr != item.data() + item.size()) {
      fail(ErrorKind::config, "bad " + std::string(what) + " value '" + std::string(item) + "'");
    }
    out.push_back(value);
  }
  return out;
}

template <typename T>
T parse_one(std::string_view text, std::string_view what) {
  auto values = parse_list<T>(text, what);
  if (values.size() != 1) fail(ErrorKind::config, "expected one " + std::string(what) + " value");
  return values.front();
}

std::string join(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_convertible_v<decltype(v), std::string>) out += v;
    else out += std::to_string(v);
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) { return to_hex(sha256(bytes)); }

std::string to_chars_string(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

// Runs fn(seed) for every seed, concurrently unless jobs == 1, and returns
// results in seed order.
template <typename Fn>
auto for_each_seed(const ExperimentConfig& config, Fn&& fn) {
  using Result = decltype(fn(std::uint64_t{}));
  std::vector<Result> results;
  if (config.jobs == 1 || config.seeds.size() == 1) {
    for (auto seed : config.seeds) results.push_back(fn(seed));
    return results;
  }
  std::vector<std::future<Result>> futures;
  for (auto seed : config.seeds) futures.push_back(std::async(std::launch::async, fn, seed));
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

std::vector<std::string> ids_of(std::span<const Example> examples) {
  std::vector<std::string> ids;
  ids.reserve(examples.size());
  for (const auto& e : examples) ids.push_back(e.id);
  return ids;
}

// Dump records for `examples`: a per-split dump when present, otherwise the
// matching records of the pool dump.
DistributionDump dump_for_examples(const ExperimentConfig& config, const Vocabulary& vocab,
                                   const std::string& stem, std::span<const Example> examples,
                                   const DistributionDump* pool) {
  const auto path = config.dumps_dir() / (stem + ".amlp");
  DistributionDump dump;
  std::optional<DistributionDump> pool_storage;
  if (std::filesystem::exists(path)) {
    dump = read_dump(path, vocab);
    const auto req = config.requests_dir() / (stem + ".jsonl");
    if (std::filesystem::exists(req)) check_response(read_request(req), dump);
    dump = subset_dump(dump, ids_of(examples));
  } else {
    if (!pool) {
      const auto pool_path = config.dumps_dir() / "pool.amlp";
      if (!std::filesystem::exists(pool_path)) {
        fail(ErrorKind::path, "missing dump '" + path.string() + "' (and no pool dump)");
      }
      pool_storage = read_dump(pool_path, vocab);
      pool = &*pool_storage;
    }
    dump = subset_dump(*pool, ids_of(examples));
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (dump.records[i].gold != examples[i].gold) {
      fail(ErrorKind::validation, "dump record '" + examples[i].id + "' disagrees with the split's gold label");
    }
  }
  return dump;
}

DistributionDump load_test_dump(const ExperimentConfig& config, const Vocabulary& vocab) {
  const auto path = config.dumps_dir() / "test.amlp";
  if (!std::filesystem::exists(path)) fail(ErrorKind::path, "missing test dump '" + path.string() + "'");
  auto dump = read_dump(path, vocab);
  const auto req = config.requests_dir() / "test.jsonl";
  if (std::filesystem::exists(req)) check_response(read_request(req), dump);
  return dump;
}

FewShotSplit load_split(const ExperimentConfig& config, std::uint64_t seed) {
  const auto path = config.split_path(seed);
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::path, "missing split '" + path.string() + "'; run `sample` first");
  }
  return read_split(path, config.task);
}

Vocabulary load_vocab(const ExperimentConfig& config) {
  const auto path = config.vocab_path();
  if (!std::filesystem::exists(path)) fail(ErrorKind::path, "missing vocabulary '" + path.string() + "'");
  return load_vocabulary(path);
}

SelectorConfig selector_for(const ExperimentConfig& config, const Vocabulary& vocab, std::uint64_t seed,
                            const DistributionDump& train) {
  SelectorConfig sel;
  sel.method = config.method;
  sel.seed = seed;
  for (const auto& tok : config.exclude_tokens) {
    auto id = vocab.id_of(tok);
    if (!id) fail(ErrorKind::config, "excluded token '" + tok + "' is not in the vocabulary");
    sel.options.excluded.push_back(*id);
  }
  sel.autol_train = &train;
  sel.autol_search.beam_width = config.beam_width;
  return sel;
}

ClassScoreTable table_for(const ExperimentConfig& config, const Vocabulary& vocab, std::uint64_t seed,
                          const DistributionDump& train) {
  const auto classes = config.task.num_classes();
  switch (config.method) {
    case Method::autol: return log_likelihood_by_class(train, classes);
    case Method::external: {
      std::string path = config.scores;
      for (auto pos = path.find("{seed}"); pos != std::string::npos; pos = path.find("{seed}")) {
        path.replace(pos, 6, std::to_string(seed));
      }
      auto table = ingest_external_scores(path, classes, vocab.size());
      table.vocab_hash = vocab.digest();
      return table;
    }
    default: return mean_by_class(train, classes);
  }
}

std::string manifest_json(const ExperimentConfig& config, std::uint64_t seed, const LabelMapping& mapping,
                          const std::string& mapping_text, const std::string& tuned_on) {
  json m;
  m["config_hash"] = config.config_hash();
  m["task"] = config.task.task_name;
  m["seed"] = seed;
  m["n"] = config.n;
  m["setting"] = static_cast<int>(config.setting);
  m["method"] = std::string(to_string(config.method));
  m["chosen_k"] = mapping.k;
  m["k_tuned_on"] = tuned_on;
  m["mapping_sha256"] = sha256_hex(mapping_text);
  return m.dump(2) + "\n";
}

struct WrittenSeed {
  std::vector<std::filesystem::path> files;
  double metric = 0.0;
};

WrittenSeed write_seed_artifacts(const ExperimentConfig& config, const Vocabulary& vocab,
                                 const SeedOutcome& outcome, bool with_predictions) {
  WrittenSeed w;
  const auto dir = config.seed_dir(outcome.seed);
  const std::string mapping_text = format_mapping(outcome.mapping, config.task, vocab);
  io::write_file_atomic(dir / "mapping.txt", mapping_text);
  io::write_file_atomic(dir / "trace.tsv", format_trace(outcome.trace));
  io::write_file_atomic(dir / "manifest.json",
                        manifest_json(config, outcome.seed, outcome.mapping, mapping_text, outcome.trace.tuned_on));
  w.files = {dir / "mapping.txt", dir / "trace.tsv", dir / "manifest.json"};
  if (with_predictions) {
    write_predictions(dir / "test_predictions.tsv", outcome.test_predictions, config.task);
    w.files.push_back(dir / "test_predictions.tsv");
  }
  w.metric = outcome.test_metric;
  return w;
}

CommandResult write_report(const ExperimentConfig& config, std::vector<std::pair<std::uint64_t, double>> per_seed,
                           CommandResult result) {
  auto report = aggregate(std::move(per_seed), std::string(to_string(config.task.metric)));
  const auto dir = config.run_dir();
  io::write_file_atomic(dir / "report.tsv", format_report_tsv(report));
  io::write_file_atomic(dir / "report.md", "| " + config.task.task_name + " (" + report.metric_name + ") |\n|---|\n| " +
                                               format_report_cell(report) + " |\n");
  result.written.push_back(dir / "report.tsv");
  result.written.push_back(dir / "report.md");
  result.report = std::move(report);
  return result;
}

std::vector<ClassId> gold_of(const DistributionDump& dump) {
  std::vector<ClassId> gold;
  for (const auto& r : dump.records) gold.push_back(r.gold);
  return gold;
}

}  // namespace

Setting parse_setting(std::string_view text) {
  const auto t = io::trim(text);
  if (t == "1" || t == "s1") return Setting::s1_train_only;
  if (t == "2" || t == "s2") return Setting::s2_train_dev;
  if (t == "3" || t == "s3") return Setting::s3_finetune;
  fail(ErrorKind::config, "unknown setting '" + std::string(t) + "' (expected 1, 2 or 3)");
}

void ExperimentConfig::validate() const {
  task.validate();
  if (n == 0) fail(ErrorKind::config, "n must be at least 1");
  if (seeds.empty()) fail(ErrorKind::config, "at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail(ErrorKind::config, "seeds must be distinct");
  }
  if (k_candidates.empty()) fail(ErrorKind::config, "k candidate set is empty");
  for (std::size_t i = 0; i < k_candidates.size(); ++i) {
    if (k_candidates[i] == 0 || (i && k_candidates[i] <= k_candidates[i - 1])) {
      fail(ErrorKind::config, "k candidates must be positive and strictly ascending");
    }
  }
  if (setting == Setting::s3_finetune) {
    const auto allowed = finetune_k_candidates();
    for (auto k : k_candidates) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(ErrorKind::config, "setting 3 searches k within {1,2,4,8,16}; got " + std::to_string(k));
      }
    }
  }
  if (method == Method::manual && mapping.empty()) fail(ErrorKind::config, "method manual needs --mapping");
  if (method == Method::external && scores.empty()) fail(ErrorKind::config, "method external needs --scores");
  if (k && *k == 0) fail(ErrorKind::config, "k must be at least 1");
}

std::string ExperimentConfig::config_hash() const {
  std::ostringstream s;
  s << format_task_spec(task) << "n=" << n << "\nseeds=" << join(seeds) << "\nmethod=" << to_string(method)
    << "\nsetting=" << static_cast<int>(setting) << "\nk_set=" << join(k_candidates)
    << "\nk=" << (k ? std::to_string(*k) : "-") << "\nexclude=" << join(exclude_tokens)
    << "\nbeam=" << beam_width << '\n';
  return sha256_hex(s.str());
}

std::string ExperimentConfig::run_name() const {
  std::string m(to_string(method));
  std::replace(m.begin(), m.end(), '_', '-');
  return m + "-s" + std::to_string(static_cast<int>(setting));
}

std::filesystem::path ExperimentConfig::vocab_path() const { return vocab.empty() ? out / "vocab.txt" : vocab; }
std::filesystem::path ExperimentConfig::dumps_dir() const { return dumps.empty() ? out / "dumps" : dumps; }
std::filesystem::path ExperimentConfig::handoff_dir() const { return handoff.empty() ? out / "handoff" : handoff; }
std::filesystem::path ExperimentConfig::split_path(std::uint64_t seed) const {
  return splits_dir() / ("seed-" + std::to_string(seed) + ".split");
}
std::filesystem::path ExperimentConfig::seed_dir(std::uint64_t seed) const {
  return run_dir() / ("seed-" + std::to_string(seed));
}

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::map<std::string, std::string> values;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(io::read_text_file(path), '\n')) {
    ++line_no;
    const auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::parse, path.string() + " line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(io::trim(line.substr(0, eq)));
    std::replace(key.begin(), key.end(), '_', '-');
    values[key] = std::string(io::trim(line.substr(eq + 1)));
  }
  return values;
}

ExperimentConfig resolve_config(const std::map<std::string, std::string>& flags,
                                const std::map<std::string, std::string>& file_values) {
  std::map<std::string, std::string> v = file_values;
  for (const auto& [key, value] : flags) v[key] = value;
  auto get = [&](const char* key) -> const std::string* {
    auto it = v.find(key);
    return it == v.end() ? nullptr : &it->second;
  };

  ExperimentConfig c;
  const auto* task = get("task");
  if (!task) fail(ErrorKind::config, "--task is required");
  c.task = load_task_spec(*task);
  if (auto* s = get("n")) c.n = parse_one<std::size_t>(*s, "n");
  if (auto* s = get("seeds")) c.seeds = parse_list<std::uint64_t>(*s, "seed");
  if (auto* s = get("method")) c.method = parse_method(*s);
  if (auto* s = get("setting")) c.setting = parse_setting(*s);
  if (auto* s = get("k-set")) {
    c.k_candidates = parse_list<std::size_t>(*s, "k");
  } else if (c.setting == Setting::s3_finetune) {
    c.k_candidates = finetune_k_candidates();
  } else if (c.method == Method::autol) {
    c.k_candidates = {1, 2, 4, 8, 16, 32, 64};
  } else {
    c.k_candidates = default_k_candidates();
  }
  if (auto* s = get("k")) c.k = parse_one<std::size_t>(*s, "k");
  if (auto* s = get("n-values")) c.n_values = parse_list<std::size_t>(*s, "n");
  if (auto* s = get("exclude")) {
    for (const auto& t : io::split(*s, ',')) {
      if (!t.empty()) c.exclude_tokens.push_back(t);
    }
  }
  if (auto* s = get("beam-width")) c.beam_width = parse_one<std::size_t>(*s, "beam-width");
  if (auto* s = get("jobs")) c.jobs = parse_one<std::size_t>(*s, "jobs");
  if (auto* s = get("out")) c.out = *s;
  if (auto* s = get("data")) c.data = *s;
  if (auto* s = get("test-data")) c.test_data = *s;
  if (auto* s = get("vocab")) c.vocab = *s;
  if (auto* s = get("dumps")) c.dumps = *s;
  if (auto* s = get("mapping")) c.mapping = *s;
  if (auto* s = get("scores")) c.scores = *s;
  if (auto* s = get("handoff")) c.handoff = *s;
  c.validate();
  return c;
}

std::vector<BridgeRequestRow> build_request(const TaskSpec& spec, std::span<const Example> examples) {
  std::vector<BridgeRequestRow> rows;
  rows.reserve(examples.size());
  for (const auto& ex : examples) rows.push_back({ex.id, apply_template(spec, ex), ex.gold});
  return rows;
}

void write_request(const std::filesystem::path& path, std::span<const BridgeRequestRow> rows) {
  std::string out;
  for (const auto& r : rows) {
    json j;
    j["example_id"] = r.example_id;
    j["prompt"] = r.prompt;
    j["gold"] = r.gold;
    out += j.dump();
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

std::vector<BridgeRequestRow> read_request(const std::filesystem::path& path) {
  std::vector<BridgeRequestRow> rows;
  std::size_t line_no = 0;
  for (const auto& line : io::split(io::read_text_file(path), '\n')) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      rows.push_back({j.at("example_id").get<std::string>(), j.at("prompt").get<std::string>(),
                      j.at("gold").get<ClassId>()});
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

void check_response(std::span<const BridgeRequestRow> request, const DistributionDump& dump) {
  std::unordered_set<std::string_view> requested;
  for (const auto& r : request) requested.insert(r.example_id);
  std::unordered_set<std::string_view> answered;
  for (const auto& r : dump.records) {
    if (!requested.count(r.example_id)) {
      fail(ErrorKind::coverage, "dump has record '" + r.example_id + "' that was not requested");
    }
    answered.insert(r.example_id);
  }
  for (const auto& r : request) {
    if (!answered.count(r.example_id)) {
      fail(ErrorKind::coverage, "dump lacks requested example '" + r.example_id + "'");
    }
  }
}

SeedOutcome run_seed(const ExperimentConfig& config, const Vocabulary& vocab, std::uint64_t seed,
                     const DistributionDump& train, const DistributionDump& tune, std::string_view tuned_on,
                     const DistributionDump& test) {
  SeedOutcome outcome;
  outcome.seed = seed;
  if (config.method == Method::manual) {
    outcome.mapping = read_mapping(config.mapping, config.task, vocab);
    const auto preds = predict_batch(outcome.mapping, tune);
    std::vector<ClassId> pred;
    for (const auto& p : preds) pred.push_back(p.prediction.predicted);
    outcome.trace.candidates = {outcome.mapping.k};
    outcome.trace.dev_scores = {evaluate_metric(config.task, pred, gold_of(tune))};
    outcome.trace.chosen_k = outcome.mapping.k;
    outcome.trace.tuned_on = std::string(tuned_on);
  } else {
    const auto table = table_for(config, vocab, seed, train);
    auto result = search_k(table, tune, config.k_candidates, config.task, selector_for(config, vocab, seed, train),
                           std::string(tuned_on));
    outcome.mapping = std::move(result.mapping);
    outcome.trace = std::move(result.trace);
  }
  outcome.test_predictions = predict_batch(outcome.mapping, test);
  std::vector<ClassId> pred;
  for (const auto& p : outcome.test_predictions) pred.push_back(p.prediction.predicted);
  outcome.test_metric = evaluate_metric(config.task, pred, gold_of(test));
  return outcome;
}

CommandResult cmd_sample(const ExperimentConfig& config) {
  if (config.data.empty()) fail(ErrorKind::config, "sample needs --data");
  const auto pool = load_dataset(config.data, config.task);
  CommandResult result;
  for (auto seed : config.seeds) {
    const auto split = sample_split(config.task, pool, config.n, seed);
    write_split(config.split_path(seed), split, config.task);
    result.written.push_back(config.split_path(seed));
  }
  return result;
}

CommandResult cmd_request(const ExperimentConfig& config, bool include_pool) {
  CommandResult result;
  for (auto seed : config.seeds) {
    const auto split = load_split(config, seed);
    const auto suffix = "-seed" + std::to_string(seed) + ".jsonl";
    write_request(config.requests_dir() / ("train" + suffix), build_request(config.task, split.train));
    result.written.push_back(config.requests_dir() / ("train" + suffix));
    if (config.setting != Setting::s1_train_only) {
      write_request(config.requests_dir() / ("dev" + suffix), build_request(config.task, split.dev));
      result.written.push_back(config.requests_dir() / ("dev" + suffix));
    }
  }
  if (!config.test_data.empty()) {
    const auto test = load_dataset(config.test_data, config.task);
    write_request(config.requests_dir() / "test.jsonl", build_request(config.task, test));
    result.written.push_back(config.requests_dir() / "test.jsonl");
  }
  if (include_pool) {
    if (config.data.empty()) fail(ErrorKind::config, "--pool needs --data");
    const auto pool = load_dataset(config.data, config.task);
    write_request(config.requests_dir() / "pool.jsonl", build_request(config.task, pool));
    result.written.push_back(config.requests_dir() / "pool.jsonl");
  }
  return result;
}

CommandResult cmd_select(const ExperimentConfig& config) {
  const auto vocab = load_vocab(config);
  const std::size_t k = config.k.value_or(config.k_candidates.back());
  auto per_seed = for_each_seed(config, [&](std::uint64_t seed) {
    const auto split = load_split(config, seed);
    const auto train = dump_for_examples(config, vocab, "train-seed" + std::to_string(seed), split.train, nullptr);
    LabelMapping mapping;
    if (config.method == Method::manual) {
      mapping = read_mapping(config.mapping, config.task, vocab);
    } else {
      mapping = build_mapping(table_for(config, vocab, seed, train), k, selector_for(config, vocab, seed, train));
    }
    const auto dir = config.seed_dir(seed);
    const std::string text = format_mapping(mapping, config.task, vocab);
    io::write_file_atomic(dir / "mapping.txt", text);
    io::write_file_atomic(dir / "manifest.json", manifest_json(config, seed, mapping, text, "none"));
    return std::vector<std::filesystem::path>{dir / "mapping.txt", dir / "manifest.json"};
  });
  CommandResult result;
  for (auto& files : per_seed) result.written.insert(result.written.end(), files.begin(), files.end());
  return result;
}

CommandResult cmd_tune_k(const ExperimentConfig& config) {
  if (config.method == Method::manual) fail(ErrorKind::config, "a manual mapping has no k to tune");
  const auto vocab = load_vocab(config);
  auto per_seed = for_each_seed(config, [&](std::uint64_t seed) {
    const auto split = load_split(config, seed);
    const auto stem = "-seed" + std::to_string(seed);
    const auto train = dump_for_examples(config, vocab, "train" + stem, split.train, nullptr);
    SeedOutcome outcome;
    outcome.seed = seed;
    const auto table = table_for(config, vocab, seed, train);
    const auto selector = selector_for(config, vocab, seed, train);
    KSearchResult r;
    if (config.setting == Setting::s1_train_only) {
      r = search_k(table, train, config.k_candidates, config.task, selector, "train");
    } else {
      const auto dev = dump_for_examples(config, vocab, "dev" + stem, split.dev, nullptr);
      r = search_k(table, dev, config.k_candidates, config.task, selector, "dev");
    }
    outcome.mapping = std::move(r.mapping);
    outcome.trace = std::move(r.trace);
    return write_seed_artifacts(config, vocab, outcome, false).files;
  });
  CommandResult result;
  for (auto& files : per_seed) result.written.insert(result.written.end(), files.begin(), files.end());
  return result;
}

CommandResult cmd_predict(const ExperimentConfig& config) {
  const auto vocab = load_vocab(config);
  const auto test = load_test_dump(config, vocab);
  CommandResult result;
  for (auto seed : config.seeds) {
    const auto path = config.seed_dir(seed) / "mapping.txt";
    if (!std::filesystem::exists(path)) fail(ErrorKind::path, "missing mapping '" + path.string() + "'");
    const auto mapping = read_mapping(path, config.task, vocab);
    const auto preds = predict_batch(mapping, test);
    write_predictions(config.seed_dir(seed) / "test_predictions.tsv", preds, config.task);
    result.written.push_back(config.seed_dir(seed) / "test_predictions.tsv");
  }
  return result;
}

CommandResult cmd_select_and_eval(const ExperimentConfig& config) {
  CommandResult result;
  std::vector<std::pair<std::uint64_t, double>> per_seed;

  if (config.setting == Setting::s3_finetune) {
    // Trainer output: <handoff>/seed-<s>/test_predictions.tsv in scorer format.
    const auto request_path = config.requests_dir() / "test.jsonl";
    if (!std::filesystem::exists(request_path)) fail(ErrorKind::path, "missing '" + request_path.string() + "'");
    const auto request = read_request(request_path);
    std::unordered_map<std::string_view, ClassId> gold_by_id;
    for (const auto& r : request) gold_by_id.emplace(r.example_id, r.gold);
    for (auto seed : config.seeds) {
      const auto path = config.handoff_dir() / ("seed-" + std::to_string(seed)) / "test_predictions.tsv";
      if (!std::filesystem::exists(path)) fail(ErrorKind::path, "missing trainer predictions '" + path.string() + "'");
      const auto preds = read_predictions(path, config.task);
      std::vector<ClassId> pred, gold;
      std::unordered_set<std::string_view> seen;
      for (const auto& p : preds) {
        auto it = gold_by_id.find(p.example_id);
        if (it == gold_by_id.end() || !seen.insert(p.example_id).second) {
          fail(ErrorKind::coverage, path.string() + ": unexpected or repeated example '" + p.example_id + "'");
        }
        pred.push_back(p.prediction.predicted);
        gold.push_back(it->second);
      }
      if (seen.size() != gold_by_id.size()) {
        fail(ErrorKind::coverage, path.string() + " does not cover every test example");
      }
      per_seed.emplace_back(seed, evaluate_metric(config.task, pred, gold));
    }
    return write_report(config, std::move(per_seed), std::move(result));
  }

  const auto vocab = load_vocab(config);
  const auto test = load_test_dump(config, vocab);
  auto outcomes = for_each_seed(config, [&](std::uint64_t seed) {
    const auto split = load_split(config, seed);
    const auto stem = "-seed" + std::to_string(seed);
    const auto train = dump_for_examples(config, vocab, "train" + stem, split.train, nullptr);
    SeedOutcome outcome;
    if (config.setting == Setting::s1_train_only) {
      outcome = run_seed(config, vocab, seed, train, train, "train", test);
    } else {
      const auto dev = dump_for_examples(config, vocab, "dev" + stem, split.dev, nullptr);
      outcome = run_seed(config, vocab, seed, train, dev, "dev", test);
    }
    return std::pair{outcome.seed, write_seed_artifacts(config, vocab, outcome, true)};
  });
  for (auto& [seed, written] : outcomes) {
    result.written.insert(result.written.end(), written.files.begin(), written.files.end());
    per_seed.emplace_back(seed, written.metric);
  }
  return write_report(config, std::move(per_seed), std::move(result));
}

CommandResult cmd_sweep_n(const ExperimentConfig& config) {
  if (config.setting == Setting::s3_finetune) fail(ErrorKind::config, "sweep-n runs settings 1 and 2 only");
  if (config.n_values.empty()) fail(ErrorKind::config, "sweep-n needs --n-values");
  if (config.data.empty()) fail(ErrorKind::config, "sweep-n needs --data (the sampling pool)");
  const auto vocab = load_vocab(config);
  const auto pool = load_dataset(config.data, config.task);
  const auto pool_path = config.dumps_dir() / "pool.amlp";
  if (!std::filesystem::exists(pool_path)) fail(ErrorKind::path, "missing pool dump '" + pool_path.string() + "'");
  const auto pool_dump = read_dump(pool_path, vocab);
  const auto test = load_test_dump(config, vocab);

  std::string table = "n\tmean\tstd\n";
  CommandResult result;
  for (std::size_t n : config.n_values) {
    auto outcomes = for_each_seed(config, [&](std::uint64_t seed) {
      const auto split = sample_split(config.task, pool, n, seed);
      const auto train = subset_dump(pool_dump, ids_of(split.train));
      if (config.setting == Setting::s1_train_only) {
        return run_seed(config, vocab, seed, train, train, "train", test).test_metric;
      }
      const auto dev = subset_dump(pool_dump, ids_of(split.dev));
      return run_seed(config, vocab, seed, train, dev, "dev", test).test_metric;
    });
    std::vector<std::pair<std::uint64_t, double>> per_seed;
    for (std::size_t i = 0; i < outcomes.size(); ++i) per_seed.emplace_back(config.seeds[i], outcomes[i]);
    const auto report = aggregate(std::move(per_seed), std::string(to_string(config.task.metric)));
    table += std::to_string(n) + '\t' + to_chars_string(report.mean) + '\t' + to_chars_string(report.std) + '\n';
  }
  const auto path = config.out / "sweeps" / (config.run_name() + ".tsv");
  io::write_file_atomic(path, table);
  result.written.push_back(path);
  return result;
}

CommandResult cmd_finetune_handoff(const ExperimentConfig& config) {
  if (config.setting != Setting::s3_finetune) fail(ErrorKind::config, "handoff is for setting 3");
  const auto vocab = load_vocab(config);
  CommandResult result;
  const auto root = config.handoff_dir();

  std::string grid = "learning_rate\tbatch_size\n";
  for (double lr : kFinetuneLearningRates) {
    for (std::size_t bs : kFinetuneBatchSizes) grid += to_chars_string(lr) + '\t' + std::to_string(bs) + '\n';
  }
  io::write_file_atomic(root / "grid.tsv", grid);
  io::write_file_atomic(root / "task.cfg", format_task_spec(config.task));
  json job;
  job["task"] = config.task.task_name;
  job["k_candidates"] = config.k_candidates;
  job["seeds"] = config.seeds;
  job["metric"] = std::string(to_string(config.task.metric));
  job["grid"] = "grid.tsv";
  job["predictions"] = "seed-<seed>/test_predictions.tsv";
  io::write_file_atomic(root / "job.json", job.dump(2) + "\n");
  result.written = {root / "grid.tsv", root / "task.cfg", root / "job.json"};

  for (auto seed : config.seeds) {
    const auto mapping_path = config.seed_dir(seed) / "mapping.txt";
    if (!std::filesystem::exists(mapping_path)) {
      fail(ErrorKind::path, "missing mapping '" + mapping_path.string() + "'; run `select --setting 3` first");
    }
    const auto mapping = read_mapping(mapping_path, config.task, vocab);
    const auto split = load_split(config, seed);
    const auto dir = root / ("seed-" + std::to_string(seed));
    write_mapping(dir / "mapping.txt", mapping, config.task, vocab);
    write_split(dir / "split.txt", split, config.task);
    result.written.push_back(dir / "mapping.txt");
    result.written.push_back(dir / "split.txt");
  }
  return result;
}

CommandResult cmd_report(const ExperimentConfig& config) {
  const auto runs = config.out / "runs";
  if (!std::filesystem::exists(runs)) fail(ErrorKind::path, "no runs under '" + runs.string() + "'");
  std::vector<std::filesystem::path> reports;
  for (const auto& entry : std::filesystem::directory_iterator(runs)) {
    if (std::filesystem::exists(entry.path() / "report.tsv")) reports.push_back(entry.path() / "report.tsv");
  }
  std::sort(reports.begin(), reports.end());
  if (reports.empty()) fail(ErrorKind::path, "no report.tsv under '" + runs.string() + "'");
  std::string md = "| run | " + config.task.task_name + " |\n|---|---|\n";
  for (const auto& path : reports) {
    const auto report = parse_report_tsv(io::read_text_file(path));
    md += "| " + path.parent_path().filename().string() + " | " + format_report_cell(report) + " |\n";
  }
  CommandResult result;
  io::write_file_atomic(config.out / "report.md", md);
  result.written.push_back(config.out / "report.md");
  return result;
}

}  // namespace amulap::cli
