#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace amulap {

using TokenId = std::uint32_t;
using ClassId = std::uint16_t;

// SHA-256 of the newline-joined token strings.
using VocabDigest = std::array<std::uint8_t, 32>;

std::string to_hex(const VocabDigest& digest);
VocabDigest sha256(std::string_view bytes);

class Vocabulary {
 public:
  Vocabulary() = default;
  // Throws validation error on duplicates, empty tokens, or tokens containing
  // '\n' / '\t' (both are separators in the on-disk formats).
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::optional<TokenId> id_of(std::string_view token) const;
  const VocabDigest& digest() const noexcept { return digest_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  VocabDigest digest_{};
};

// One token per line, UTF-8; line i is token id i. A single trailing newline
// is allowed.
Vocabulary load_vocabulary(const std::filesystem::path& path);
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

}  // namespace amulap
