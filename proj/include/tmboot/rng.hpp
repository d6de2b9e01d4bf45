#pragma once

#include <cstdint>
#include <random>

namespace tmboot {

/// Seedable, splittable random stream. Wraps std::mt19937_64 (whose output
/// sequence is fixed by the standard) and derives doubles and bounded
/// integers itself, since the std distributions differ across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Bernoulli draw; consumes exactly one value regardless of p.
  bool chance(double p) { return uniform() < p; }

  /// Independent child stream identified by `stream`; does not advance this one.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Fisher-Yates shuffle drawing from `rng` in index order n-1 .. 1.
template <typename Range>
void shuffle(Range& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace tmboot
