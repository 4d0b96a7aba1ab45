#include "amulap/dist_store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "amulap/error.hpp"
#include "amulap/io.hpp"

namespace amulap {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'L', 'P'};

class Writer {
 public:
  void bytes(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<char>(v & 0xff));
    out_.push_back(static_cast<char>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out_.push_back(static_cast<char>((v >> s) & 0xff));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) {
    if (s.size() > 0xffffffffu) fail(ErrorKind::validation, "string too long for dump");
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::string_view bytes(std::size_t n) {
    if (in_.size() - pos_ < n) fail(ErrorKind::parse, "dump truncated at byte " + std::to_string(pos_));
    auto out = in_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint16_t u16() {
    auto b = bytes(2);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[0]) |
                                      (static_cast<std::uint8_t>(b[1]) << 8));
  }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const auto n = u32();
    return std::string(bytes(n));
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

void check_classes(const DistributionDump& dump, std::size_t classes) {
  if (classes == 0) fail(ErrorKind::coverage, "no classes requested");
  for (const auto& r : dump.records) {
    if (r.probs.size() != dump.vocab_size) {
      fail(ErrorKind::shape, "record '" + r.example_id + "' has " + std::to_string(r.probs.size()) +
                                 " entries, expected " + std::to_string(dump.vocab_size));
    }
    if (r.gold >= classes) {
      fail(ErrorKind::validation, "record '" + r.example_id + "' has class " +
                                      std::to_string(r.gold) + " outside 0.." +
                                      std::to_string(classes - 1));
    }
  }
}

template <typename Accumulate>
ClassScoreTable aggregate_by_class(const DistributionDump& dump, std::size_t classes,
                                   Accumulate&& accumulate) {
  check_classes(dump, classes);
  ClassScoreTable table;
  table.per_class.assign(classes, std::vector<double>(dump.vocab_size, 0.0));
  table.n_per_class.assign(classes, 0);
  table.vocab_hash = dump.vocab_hash;
  for (const auto& r : dump.records) {
    auto& acc = table.per_class[r.gold];
    for (std::size_t v = 0; v < acc.size(); ++v) acc[v] += accumulate(r.probs[v]);
    ++table.n_per_class[r.gold];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (table.n_per_class[c] == 0) {
      fail(ErrorKind::coverage, "class " + std::to_string(c) + " has no records");
    }
  }
  return table;
}

}  // namespace

void validate_dump(const DistributionDump& dump) {
  std::unordered_set<std::string_view> ids;
  for (const auto& r : dump.records) {
    if (!ids.insert(r.example_id).second) {
      fail(ErrorKind::validation, "duplicate example id '" + r.example_id + "'");
    }
    if (r.probs.size() != dump.vocab_size) {
      fail(ErrorKind::validation, "record '" + r.example_id + "' has " +
                                      std::to_string(r.probs.size()) + " entries, expected " +
                                      std::to_string(dump.vocab_size));
    }
    double sum = 0.0;
    for (float p : r.probs) {
      if (!std::isfinite(p) || p < 0.0f) {
        fail(ErrorKind::validation, "record '" + r.example_id + "' has a negative or non-finite entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance) {
      std::ostringstream msg;
      msg << "record '" << r.example_id << "' sums to " << sum << ", not 1";
      fail(ErrorKind::validation, msg.str());
    }
  }
}

std::string encode_dump(const DistributionDump& dump) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u16(kDumpFormatVersion);
  w.u32(dump.vocab_size);
  w.bytes(dump.vocab_hash.data(), dump.vocab_hash.size());
  w.str(dump.model_tag);
  if (dump.records.size() > 0xffffffffu) fail(ErrorKind::validation, "too many records");
  w.u32(static_cast<std::uint32_t>(dump.records.size()));
  for (const auto& r : dump.records) {
    if (r.probs.size() != dump.vocab_size) {
      fail(ErrorKind::shape, "record '" + r.example_id + "' does not match |V|");
    }
    w.str(r.example_id);
    w.u16(r.gold);
    for (float p : r.probs) w.f32(p);
  }
  return w.take();
}

DistributionDump decode_dump(std::string_view bytes) {
  Reader r(bytes);
  if (std::memcmp(r.bytes(4).data(), kMagic, 4) != 0) fail(ErrorKind::parse, "bad dump magic");
  const auto version = r.u16();
  if (version != kDumpFormatVersion) {
    fail(ErrorKind::compatibility, "unsupported dump version " + std::to_string(version));
  }
  DistributionDump dump;
  dump.vocab_size = r.u32();
  const auto hash = r.bytes(dump.vocab_hash.size());
  std::memcpy(dump.vocab_hash.data(), hash.data(), hash.size());
  dump.model_tag = r.str();
  const auto count = r.u32();
  dump.records.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    DistributionRecord rec;
    rec.example_id = r.str();
    rec.gold = r.u16();
    rec.probs.resize(dump.vocab_size);
    for (auto& p : rec.probs) p = r.f32();
    dump.records.push_back(std::move(rec));
  }
  if (!r.done()) fail(ErrorKind::parse, "trailing bytes after last record");
  return dump;
}

void write_dump(const std::filesystem::path& path, const DistributionDump& dump) {
  io::write_file_atomic(path, encode_dump(dump));
}

DistributionDump read_dump(const std::filesystem::path& path,
                           const std::optional<VocabDigest>& expected) {
  DistributionDump dump;
  try {
    dump = decode_dump(io::read_text_file(path));
    if (expected && dump.vocab_hash != *expected) {
      fail(ErrorKind::compatibility, "vocab hash " + to_hex(dump.vocab_hash) +
                                         " does not match vocabulary " + to_hex(*expected));
    }
    validate_dump(dump);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::path) throw;
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
  return dump;
}

DistributionDump subset_dump(const DistributionDump& dump, std::span<const std::string> ids) {
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < dump.records.size(); ++i) index.emplace(dump.records[i].example_id, i);
  DistributionDump out;
  out.vocab_size = dump.vocab_size;
  out.vocab_hash = dump.vocab_hash;
  out.model_tag = dump.model_tag;
  out.records.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) fail(ErrorKind::coverage, "dump has no record for example '" + id + "'");
    out.records.push_back(dump.records[it->second]);
  }
  return out;
}

ClassScoreTable mean_by_class(const DistributionDump& dump, std::size_t classes) {
  auto table = aggregate_by_class(dump, classes, [](float p) { return static_cast<double>(p); });
  for (std::size_t c = 0; c < classes; ++c) {
    const double n = static_cast<double>(table.n_per_class[c]);
    for (double& z : table.per_class[c]) z /= n;
  }
  return table;
}

ClassScoreTable log_likelihood_by_class(const DistributionDump& dump, std::size_t classes) {
  auto table = aggregate_by_class(dump, classes, [](float p) {
    return std::log(std::max(static_cast<double>(p), kLogProbabilityFloor));
  });
  table.source = ScoreSource::log_likelihood_sum;
  return table;
}

ClassScoreTable parse_external_scores(std::string_view text, std::size_t classes,
                                      std::size_t vocab_size) {
  ClassScoreTable table;
  table.source = ScoreSource::external;
  std::size_t line_no = 0;
  for (const auto& raw : io::split(text, '\n')) {
    ++line_no;
    const auto line = io::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    row.reserve(vocab_size);
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos == line.size()) break;
      std::size_t end = line.find_first_of(" \t", pos);
      if (end == std::string_view::npos) end = line.size();
      double value = 0.0;
      // std::from_chars for double is available in libstdc++ 11.
      auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + end, value);
      if (ec != std::errc() || ptr != line.data() + end || !std::isfinite(value)) {
        fail(ErrorKind::parse, "external scores line " + std::to_string(line_no) + ": bad value '" +
                                   std::string(line.substr(pos, end - pos)) + "'");
      }
      row.push_back(value);
      pos = end;
    }
    if (row.size() != vocab_size) {
      fail(ErrorKind::shape, "external scores line " + std::to_string(line_no) + " has " +
                                 std::to_string(row.size()) + " values, expected " +
                                 std::to_string(vocab_size));
    }
    table.per_class.push_back(std::move(row));
  }
  if (table.per_class.size() != classes) {
    fail(ErrorKind::shape, "external scores have " + std::to_string(table.per_class.size()) +
                               " rows, expected " + std::to_string(classes));
  }
  table.n_per_class.assign(classes, 0);
  return table;
}

ClassScoreTable ingest_external_scores(const std::filesystem::path& path, std::size_t classes,
                                       std::size_t vocab_size) {
  try {
    return parse_external_scores(io::read_text_file(path), classes, vocab_size);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::path) throw;
    throw Error(e.kind(), path.string() + ": " + std::string(e.what()));
  }
}

std::string format_external_scores(const ClassScoreTable& table) {
  std::string out;
  char buf[32];
  for (const auto& row : table.per_class) {
    for (std::size_t v = 0; v < row.size(); ++v) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[v]);
      (void)ec;
      if (v) out.push_back(' ');
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace amulap
