#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace amulap {

// Portable seeded generator. std::mt19937_64 is fully specified by the C++
// standard (the 10000th output of a default-seeded engine is
// 9981545732273789042), but the standard distributions are not, so bounded
// draws and shuffles are implemented here on top of the raw engine.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace amulap
