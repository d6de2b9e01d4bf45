#include "tmboot/rng.hpp"

#include <array>

namespace tmboot {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::array<std::uint32_t, 4> words{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(make_engine(seed, stream)) {}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r = engine_();
  while (r >= limit) r = engine_();
  return r % bound;
}

Rng Rng::split(std::uint64_t stream) const {
  // Child streams hash (parent stream, child id) into a fresh stream id.
  const std::uint64_t child = (stream_ + 1) * 0x9E3779B97F4A7C15ull ^ (stream + 0x632BE59BD9B4E019ull);
  return Rng(seed_, child);
}

}  // namespace tmboot
