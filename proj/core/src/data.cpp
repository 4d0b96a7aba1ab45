#include "amulap/data.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "amulap/error.hpp"
#include "amulap/io.hpp"
#include "amulap/rng.hpp"

namespace amulap {

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape_field(std::string_view s, std::size_t line_no) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i == s.size()) fail(ErrorKind::parse, "dangling escape on line " + std::to_string(line_no));
    switch (s[i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default:
        fail(ErrorKind::parse, "unknown escape '\\" + std::string(1, s[i]) + "' on line " +
                                   std::to_string(line_no));
    }
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = nl + 1;
  }
  return lines;
}

void check_unique_ids(std::span<const Example> examples, std::string_view source) {
  std::unordered_set<std::string_view> seen;
  for (const auto& ex : examples) {
    if (!seen.insert(ex.id).second) {
      fail(ErrorKind::parse, "duplicate example id '" + ex.id + "' in " + std::string(source));
    }
  }
}

}  // namespace

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::accuracy: return "accuracy";
    case Metric::f1: return "f1";
    case Metric::matthews: return "matthews";
  }
  return "accuracy";
}

Metric parse_metric(std::string_view name) {
  if (name == "accuracy" || name == "acc") return Metric::accuracy;
  if (name == "f1") return Metric::f1;
  if (name == "matthews" || name == "mcc") return Metric::matthews;
  fail(ErrorKind::config, "unknown metric '" + std::string(name) + "'");
}

std::optional<ClassId> TaskSpec::class_index(std::string_view name) const {
  auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) return std::nullopt;
  return static_cast<ClassId>(it - classes.begin());
}

bool TaskSpec::needs_second_sentence() const {
  return template_text.find(kSecondSentencePlaceholder) != std::string::npos;
}

void TaskSpec::validate() const {
  if (classes.empty()) fail(ErrorKind::config, "task '" + task_name + "' declares no classes");
  if (classes.size() > 0xffff) fail(ErrorKind::config, "too many classes");
  std::unordered_set<std::string_view> names;
  for (const auto& c : classes) {
    if (c.empty()) fail(ErrorKind::config, "empty class name in task '" + task_name + "'");
    if (c.find_first_of("\t\n") != std::string::npos) {
      fail(ErrorKind::config, "class name '" + c + "' contains a tab or newline");
    }
    if (!names.insert(c).second) fail(ErrorKind::config, "duplicate class name '" + c + "'");
  }
  const std::size_t masks = count_occurrences(template_text, kMaskPlaceholder);
  if (masks != 1) {
    fail(ErrorKind::template_syntax, "template must contain exactly one " +
                                         std::string(kMaskPlaceholder) + ", found " +
                                         std::to_string(masks));
  }
  if (template_text.find(kFirstSentencePlaceholder) == std::string::npos) {
    fail(ErrorKind::template_syntax, "template does not reference <S1>");
  }
  if (metric == Metric::f1 && !positive_class) {
    fail(ErrorKind::config, "metric f1 requires positive_class");
  }
  if (positive_class && *positive_class >= classes.size()) {
    fail(ErrorKind::config, "positive_class out of range");
  }
  if (metric != Metric::accuracy && classes.size() != 2) {
    fail(ErrorKind::config, "metric " + std::string(to_string(metric)) + " requires a binary task");
  }
}

TaskSpec parse_task_spec(std::string_view text) {
  TaskSpec spec;
  std::optional<std::string> positive;
  bool have_template = false;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = io::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::parse, "task spec line " + std::to_string(i + 1) + ": expected key = value");
    }
    const std::string key(io::trim(line.substr(0, eq)));
    const std::string value(io::trim(line.substr(eq + 1)));
    if (key == "task_name") {
      spec.task_name = value;
    } else if (key == "classes") {
      for (const auto& c : io::split(value, ',')) spec.classes.emplace_back(io::trim(c));
    } else if (key == "template") {
      spec.template_text = value;
      have_template = true;
    } else if (key == "metric") {
      spec.metric = parse_metric(value);
    } else if (key == "positive_class") {
      if (!value.empty()) positive = value;
    } else {
      fail(ErrorKind::parse, "task spec line " + std::to_string(i + 1) + ": unknown key '" + key + "'");
    }
  }
  if (spec.task_name.empty()) fail(ErrorKind::config, "task spec lacks task_name");
  if (!have_template) fail(ErrorKind::config, "task spec lacks template");
  if (positive) {
    spec.positive_class = spec.class_index(*positive);
    if (!spec.positive_class) {
      fail(ErrorKind::config, "positive_class '" + *positive + "' is not a declared class");
    }
  }
  spec.validate();
  return spec;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  return parse_task_spec(io::read_text_file(path));
}

std::string format_task_spec(const TaskSpec& spec) {
  std::ostringstream out;
  out << "task_name = " << spec.task_name << '\n';
  out << "classes = ";
  for (std::size_t i = 0; i < spec.classes.size(); ++i) out << (i ? "," : "") << spec.classes[i];
  out << '\n';
  out << "template = " << spec.template_text << '\n';
  out << "metric = " << to_string(spec.metric) << '\n';
  if (spec.positive_class) out << "positive_class = " << spec.classes[*spec.positive_class] << '\n';
  return out.str();
}

ClassId resolve_label(const TaskSpec& spec, std::string_view raw) {
  const std::string_view label = io::trim(raw);
  if (auto idx = spec.class_index(label)) return *idx;
  unsigned value = 0;
  const auto* end = label.data() + label.size();
  auto [ptr, ec] = std::from_chars(label.data(), end, value);
  if (!label.empty() && ec == std::errc() && ptr == end && value < spec.classes.size()) {
    return static_cast<ClassId>(value);
  }
  fail(ErrorKind::label, "label '" + std::string(label) + "' is not a class of task '" +
                             spec.task_name + "'");
}

std::vector<Example> parse_tsv_dataset(std::string_view text, const TaskSpec& spec) {
  const auto lines = lines_of(text);
  if (lines.empty()) fail(ErrorKind::parse, "line 1: missing header row");
  const auto header = io::split(lines[0], '\t');
  std::optional<std::size_t> col_s1, col_s2, col_label, col_id;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = io::trim(header[c]);
    if (name == "sentence1") col_s1 = c;
    else if (name == "sentence2") col_s2 = c;
    else if (name == "label") col_label = c;
    else if (name == "id") col_id = c;
  }
  if (!col_s1 || !col_label) {
    fail(ErrorKind::parse, "line 1: header must contain 'sentence1' and 'label'");
  }
  std::vector<Example> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = io::split(lines[i], '\t');
    const std::string line_ref = "line " + std::to_string(i + 1);
    if (fields.size() != header.size()) {
      fail(ErrorKind::parse, line_ref + ": expected " + std::to_string(header.size()) +
                                 " fields, found " + std::to_string(fields.size()));
    }
    Example ex;
    ex.id = col_id ? fields[*col_id] : std::to_string(out.size());
    ex.sentence1 = fields[*col_s1];
    if (col_s2) ex.sentence2 = fields[*col_s2];
    try {
      ex.gold = resolve_label(spec, fields[*col_label]);
    } catch (const Error& e) {
      fail(ErrorKind::label, line_ref + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  check_unique_ids(out, "TSV dataset");
  return out;
}

std::vector<Example> parse_jsonl_dataset(std::string_view text, const TaskSpec& spec) {
  const auto lines = lines_of(text);
  std::vector<Example> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const std::string line_ref = "line " + std::to_string(i + 1);
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, line_ref + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("sentence1") || !row["sentence1"].is_string() ||
        !row.contains("label")) {
      fail(ErrorKind::parse, line_ref + ": expected an object with string 'sentence1' and 'label'");
    }
    Example ex;
    if (row.contains("id")) {
      const auto& id = row["id"];
      ex.id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
      ex.id = std::to_string(out.size());
    }
    ex.sentence1 = row["sentence1"].get<std::string>();
    if (row.contains("sentence2") && !row["sentence2"].is_null()) {
      if (!row["sentence2"].is_string()) fail(ErrorKind::parse, line_ref + ": 'sentence2' must be a string");
      ex.sentence2 = row["sentence2"].get<std::string>();
    }
    const auto& label = row["label"];
    std::string raw;
    if (label.is_string()) raw = label.get<std::string>();
    else if (label.is_number_integer()) raw = label.dump();
    else fail(ErrorKind::parse, line_ref + ": 'label' must be a string or integer");
    try {
      ex.gold = resolve_label(spec, raw);
    } catch (const Error& e) {
      fail(ErrorKind::label, line_ref + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  check_unique_ids(out, "JSONL dataset");
  return out;
}

std::vector<Example> load_dataset(const std::filesystem::path& path, const TaskSpec& spec) {
  const std::string text = io::read_text_file(path);
  const std::string ext = path.extension().string();
  try {
    if (ext == ".jsonl" || ext == ".json") return parse_jsonl_dataset(text, spec);
    return parse_tsv_dataset(text, spec);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
}

void write_jsonl_dataset(const std::filesystem::path& path, std::span<const Example> examples,
                         const TaskSpec& spec) {
  std::string out;
  for (const auto& ex : examples) {
    nlohmann::json row;
    row["id"] = ex.id;
    row["sentence1"] = ex.sentence1;
    if (ex.sentence2) row["sentence2"] = *ex.sentence2;
    row["label"] = spec.classes.at(ex.gold);
    out += row.dump();
    out += '\n';
  }
  io::write_file_atomic(path, out);
}

FewShotSplit sample_split(const TaskSpec& spec, std::span<const Example> pool, std::size_t n,
                          std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::capacity, "n must be at least 1");
  std::vector<std::vector<std::size_t>> by_class(spec.num_classes());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].gold >= by_class.size()) {
      fail(ErrorKind::label, "example '" + pool[i].id + "' has out-of-range class");
    }
    by_class[pool[i].gold].push_back(i);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 2 * n) {
      fail(ErrorKind::capacity, "class '" + spec.classes[c] + "' has " +
                                    std::to_string(by_class[c].size()) + " examples, need " +
                                    std::to_string(2 * n));
    }
  }
  check_unique_ids(pool, "sampling pool");

  FewShotSplit split;
  split.seed = seed;
  split.n = n;
  SplitRng rng(seed);
  for (auto& members : by_class) {
    rng.shuffle(std::span(members));
    for (std::size_t j = 0; j < n; ++j) split.train.push_back(pool[members[j]]);
    for (std::size_t j = n; j < 2 * n; ++j) split.dev.push_back(pool[members[j]]);
  }
  return split;
}

std::string format_split(const FewShotSplit& split, const TaskSpec& spec) {
  std::ostringstream out;
  out << "# split task=" << spec.task_name << " seed=" << split.seed << " n=" << split.n << '\n';
  auto section = [&](std::string_view name, const std::vector<Example>& rows) {
    out << '[' << name << "]\n";
    for (const auto& ex : rows) {
      out << escape_field(ex.id) << '\t' << spec.classes.at(ex.gold) << '\t'
          << escape_field(ex.sentence1);
      if (ex.sentence2) out << '\t' << escape_field(*ex.sentence2);
      out << '\n';
    }
  };
  section("train", split.train);
  section("dev", split.dev);
  return out.str();
}

FewShotSplit parse_split(std::string_view text, const TaskSpec& spec) {
  FewShotSplit split;
  const auto lines = lines_of(text);
  if (lines.empty() || !lines[0].starts_with("# split ")) {
    fail(ErrorKind::parse, "line 1: missing split header");
  }
  bool have_seed = false, have_n = false;
  for (const auto& kv : io::split(lines[0].substr(8), ' ')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string_view key(kv.data(), eq);
    const std::string_view value(kv.data() + eq + 1, kv.size() - eq - 1);
    try {
      if (key == "seed") {
        split.seed = std::stoull(std::string(value));
        have_seed = true;
      } else if (key == "n") {
        split.n = std::stoull(std::string(value));
        have_n = true;
      }
    } catch (const std::exception&) {
      fail(ErrorKind::parse, "line 1: bad value for '" + std::string(key) + "'");
    }
  }
  if (!have_seed || !have_n) fail(ErrorKind::parse, "line 1: split header lacks seed or n");

  std::vector<Example>* section = nullptr;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) continue;
    if (line == "[train]") { section = &split.train; continue; }
    if (line == "[dev]") { section = &split.dev; continue; }
    if (!section) fail(ErrorKind::parse, "line " + std::to_string(i + 1) + ": row outside a section");
    const auto fields = io::split(line, '\t');
    if (fields.size() != 3 && fields.size() != 4) {
      fail(ErrorKind::parse, "line " + std::to_string(i + 1) + ": expected 3 or 4 fields");
    }
    Example ex;
    ex.id = unescape_field(fields[0], i + 1);
    auto cls = spec.class_index(fields[1]);
    if (!cls) fail(ErrorKind::label, "line " + std::to_string(i + 1) + ": unknown class '" + fields[1] + "'");
    ex.gold = *cls;
    ex.sentence1 = unescape_field(fields[2], i + 1);
    if (fields.size() == 4) ex.sentence2 = unescape_field(fields[3], i + 1);
    section->push_back(std::move(ex));
  }
  return split;
}

void write_split(const std::filesystem::path& path, const FewShotSplit& split, const TaskSpec& spec) {
  io::write_file_atomic(path, format_split(split, spec));
}

FewShotSplit read_split(const std::filesystem::path& path, const TaskSpec& spec) {
  try {
    return parse_split(io::read_text_file(path), spec);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::path) throw;
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
}

std::string apply_template(const TaskSpec& spec, const Example& example) {
  const std::string_view tmpl = spec.template_text;
  std::string out;
  out.reserve(tmpl.size() + example.sentence1.size() + 32);
  std::size_t masks = 0;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const std::string_view rest = tmpl.substr(i);
    if (rest.starts_with(kFirstSentencePlaceholder)) {
      out += example.sentence1;
      i += kFirstSentencePlaceholder.size();
    } else if (rest.starts_with(kSecondSentencePlaceholder)) {
      if (!example.sentence2) {
        fail(ErrorKind::template_syntax, "template of task '" + spec.task_name +
                                             "' needs sentence2 but example '" + example.id +
                                             "' has none");
      }
      out += *example.sentence2;
      i += kSecondSentencePlaceholder.size();
    } else if (rest.starts_with(kMaskPlaceholder)) {
      out += kMaskPlaceholder;
      ++masks;
      i += kMaskPlaceholder.size();
    } else {
      out.push_back(tmpl[i]);
      ++i;
    }
  }
  if (masks != 1 || count_occurrences(out, kMaskPlaceholder) != 1) {
    fail(ErrorKind::template_syntax, "prompt for example '" + example.id +
                                         "' does not contain exactly one " +
                                         std::string(kMaskPlaceholder));
  }
  return out;
}

}  // namespace amulap
