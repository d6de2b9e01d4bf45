#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tmboot {

/// Fixed-length packed bit array, 64 bits per word. Bits past size() are
/// always zero so word-wise kernels never need a tail mask on the input side.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n) : size_(n), words_(word_count_for(n), 0) {}

  static constexpr std::size_t word_count_for(std::size_t n) { return (n + 63) / 64; }

  std::size_t size() const { return size_; }
  std::size_t word_count() const { return words_.size(); }

  bool test(std::size_t k) const { return (words_[k >> 6] >> (k & 63)) & 1u; }
  void set(std::size_t k, bool on = true) {
    const std::uint64_t bit = std::uint64_t{1} << (k & 63);
    if (on) {
      words_[k >> 6] |= bit;
    } else {
      words_[k >> 6] &= ~bit;
    }
  }
  void reset() { std::fill(words_.begin(), words_.end(), 0); }

  std::size_t count() const;
  bool none() const;

  /// Indices of set bits in ascending order.
  std::vector<std::size_t> ones() const;

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Mask with exactly the first size() bits set.
  static BitVector all_ones(std::size_t n);

  /// Concatenate `tail` after `head`.
  static BitVector concat(const BitVector& head, const BitVector& tail);

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace tmboot
