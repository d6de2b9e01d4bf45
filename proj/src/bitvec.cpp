#include "tmboot/bitvec.hpp"

#include <bit>

namespace tmboot {

std::size_t BitVector::count() const {
  std::size_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

bool BitVector::none() const {
  for (std::uint64_t w : words_) {
    if (w != 0) return false;
  }
  return true;
}

std::vector<std::size_t> BitVector::ones() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t word = words_[w];
    while (word != 0) {
      out.push_back(w * 64 + static_cast<std::size_t>(std::countr_zero(word)));
      word &= word - 1;
    }
  }
  return out;
}

BitVector BitVector::all_ones(std::size_t n) {
  BitVector v(n);
  for (auto& w : v.words_) w = ~std::uint64_t{0};
  if (n % 64 != 0) v.words_.back() = (std::uint64_t{1} << (n % 64)) - 1;
  return v;
}

BitVector BitVector::concat(const BitVector& head, const BitVector& tail) {
  BitVector out(head.size() + tail.size());
  std::copy(head.words_.begin(), head.words_.end(), out.words_.begin());
  for (std::size_t k : tail.ones()) out.set(head.size() + k);
  return out;
}

}  // namespace tmboot
