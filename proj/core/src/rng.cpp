#include "amulap/rng.hpp"

#include <cassert>

namespace amulap {

std::uint64_t SplitRng::below(std::uint64_t bound) {
  assert(bound > 0);
  // Values below `threshold` would over-represent the low residues.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace amulap
