// Compiled with -mavx2; only reached after a runtime CPUID check.
#include <immintrin.h>

#include "tmboot/simd.hpp"

namespace tmboot::simd {
namespace {

bool clause_fires_avx2(const std::uint64_t* include, const std::uint64_t* negate,
                       const std::uint64_t* x, std::size_t words) {
  std::size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    const __m256i inc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(include + w));
    const __m256i neg = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(negate + w));
    const __m256i xv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + w));
    // testc(x, inc): inc & ~x == 0; testz(neg, x): neg & x == 0
    if (!_mm256_testc_si256(xv, inc) || !_mm256_testz_si256(neg, xv)) return false;
  }
  for (; w < words; ++w) {
    if (((include[w] & ~x[w]) | (negate[w] & x[w])) != 0) return false;
  }
  return true;
}

bool monotone_fires_avx2(const std::uint64_t* include, const std::uint64_t* x,
                         std::size_t words) {
  std::size_t w = 0;
  for (; w + 4 <= words; w += 4) {
    const __m256i inc = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(include + w));
    const __m256i xv = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(x + w));
    if (!_mm256_testc_si256(xv, inc)) return false;
  }
  for (; w < words; ++w) {
    if ((include[w] & ~x[w]) != 0) return false;
  }
  return true;
}

// Spread 16 mask bits into 16 int16 lanes of 0 / -1.
inline __m256i expand16(std::uint32_t bits16) {
  const __m256i lane_bits = _mm256_setr_epi16(
      1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 8192, 16384,
      static_cast<short>(0x8000));
  const __m256i b = _mm256_set1_epi16(static_cast<short>(bits16));
  return _mm256_cmpeq_epi16(_mm256_and_si256(b, lane_bits), lane_bits);
}

void step_states_avx2(std::int16_t* states, const std::uint64_t* up,
                      const std::uint64_t* down, std::size_t words,
                      std::int16_t max_state) {
  const __m256i lo = _mm256_set1_epi16(1);
  const __m256i hi = _mm256_set1_epi16(max_state);
  for (std::size_t w = 0; w < words; ++w) {
    const std::uint64_t u = up[w];
    const std::uint64_t d = down[w];
    if ((u | d) == 0) continue;
    for (int q = 0; q < 4; ++q) {
      const auto ub = static_cast<std::uint32_t>((u >> (16 * q)) & 0xFFFFu);
      const auto db = static_cast<std::uint32_t>((d >> (16 * q)) & 0xFFFFu);
      if ((ub | db) == 0) continue;
      auto* p = reinterpret_cast<__m256i*>(states + w * 64 + 16 * q);
      __m256i s = _mm256_loadu_si256(p);
      // lanes are 0 / -1: subtracting the up mask adds one.
      s = _mm256_sub_epi16(s, expand16(ub));
      s = _mm256_add_epi16(s, expand16(db));
      s = _mm256_min_epi16(_mm256_max_epi16(s, lo), hi);
      _mm256_storeu_si256(p, s);
    }
  }
}

void include_mask_avx2(const std::int16_t* states, std::size_t words,
                       std::int16_t boundary, std::uint64_t* out) {
  const __m256i bound = _mm256_set1_epi16(boundary);
  for (std::size_t w = 0; w < words; ++w) {
    const std::int16_t* block = states + w * 64;
    std::uint64_t bits = 0;
    for (int half = 0; half < 2; ++half) {
      const __m256i a = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(block + 32 * half));
      const __m256i b = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(block + 32 * half + 16));
      const __m256i ga = _mm256_cmpgt_epi16(a, bound);
      const __m256i gb = _mm256_cmpgt_epi16(b, bound);
      // packs interleaves 128-bit lanes; permute restores element order.
      __m256i packed = _mm256_packs_epi16(ga, gb);
      packed = _mm256_permute4x64_epi64(packed, 0xD8);
      const auto m = static_cast<std::uint32_t>(_mm256_movemask_epi8(packed));
      bits |= static_cast<std::uint64_t>(m) << (32 * half);
    }
    out[w] = bits;
  }
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2", clause_fires_avx2, monotone_fires_avx2,
                                 step_states_avx2, include_mask_avx2};
  return table;
}

}  // namespace tmboot::simd
