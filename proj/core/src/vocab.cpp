#include "amulap/vocab.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include "amulap/error.hpp"
#include "amulap/io.hpp"

namespace amulap {

std::string to_hex(const VocabDigest& digest) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(digest.size() * 2);
  for (std::uint8_t b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

VocabDigest sha256(std::string_view bytes) {
  VocabDigest digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  return digest;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  ids_.reserve(tokens_.size());
  std::string joined;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty()) fail(ErrorKind::validation, "empty token at id " + std::to_string(i));
    if (t.find_first_of("\n\t") != std::string::npos) {
      fail(ErrorKind::validation, "token at id " + std::to_string(i) + " contains a tab or newline");
    }
    if (!ids_.emplace(t, static_cast<TokenId>(i)).second) {
      fail(ErrorKind::validation, "duplicate token '" + t + "' at id " + std::to_string(i));
    }
    if (i > 0) joined.push_back('\n');
    joined += t;
  }
  digest_ = sha256(joined);
}

std::optional<TokenId> Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::string text = io::read_text_file(path);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  std::vector<std::string> tokens;
  if (!text.empty()) {
    std::size_t start = 0;
    for (;;) {
      const std::size_t nl = text.find('\n', start);
      std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(std::move(line));
      if (nl == std::string::npos) break;
      start = nl + 1;
    }
  }
  return Vocabulary(std::move(tokens));
}

void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::ostringstream out;
  for (const auto& t : vocab.tokens()) out << t << '\n';
  io::write_file_atomic(path, out.str());
}

}  // namespace amulap
