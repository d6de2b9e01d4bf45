#include "tmboot/simd.hpp"

#include <algorithm>

namespace tmboot::simd {
namespace {

bool clause_fires_scalar(const std::uint64_t* include, const std::uint64_t* negate,
                         const std::uint64_t* x, std::size_t words) {
  for (std::size_t w = 0; w < words; ++w) {
    if (((include[w] & ~x[w]) | (negate[w] & x[w])) != 0) return false;
  }
  return true;
}

bool monotone_fires_scalar(const std::uint64_t* include, const std::uint64_t* x,
                           std::size_t words) {
  for (std::size_t w = 0; w < words; ++w) {
    if ((include[w] & ~x[w]) != 0) return false;
  }
  return true;
}

void step_states_scalar(std::int16_t* states, const std::uint64_t* up,
                        const std::uint64_t* down, std::size_t words,
                        std::int16_t max_state) {
  for (std::size_t w = 0; w < words; ++w) {
    const std::uint64_t u = up[w];
    const std::uint64_t d = down[w];
    if ((u | d) == 0) continue;
    std::int16_t* block = states + w * 64;
    for (int b = 0; b < 64; ++b) {
      const int delta = static_cast<int>((u >> b) & 1u) - static_cast<int>((d >> b) & 1u);
      if (delta == 0) continue;
      block[b] = static_cast<std::int16_t>(
          std::clamp(block[b] + delta, 1, static_cast<int>(max_state)));
    }
  }
}

void include_mask_scalar(const std::int16_t* states, std::size_t words,
                         std::int16_t boundary, std::uint64_t* out) {
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t bits = 0;
    const std::int16_t* block = states + w * 64;
    for (int b = 0; b < 64; ++b) {
      if (block[b] > boundary) bits |= std::uint64_t{1} << b;
    }
    out[w] = bits;
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", clause_fires_scalar, monotone_fires_scalar,
                                 step_states_scalar, include_mask_scalar};
  return table;
}

}  // namespace tmboot::simd
