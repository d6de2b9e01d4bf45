#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmboot/bitvec.hpp"

namespace tmboot {

/// One Tsetlin automaton per literal, states in [1, 2N]. State > N means
/// the literal is included. The include bitmask is kept in sync with the
/// states so clause evaluation never touches the state array.
class AutomatonTeam {
 public:
  AutomatonTeam() = default;
  AutomatonTeam(std::size_t literals, int states_per_action);

  std::size_t size() const { return size_; }
  int states_per_action() const { return n_; }
  int max_state() const { return 2 * n_; }

  int state(std::size_t k) const { return states_[k]; }
  void set_state(std::size_t k, int value);
  bool included(std::size_t k) const { return included_.test(k); }
  int confidence(std::size_t k) const { return state(k) > n_ ? state(k) - n_ : 0; }

  const BitVector& include_mask() const { return included_; }
  std::span<const std::int16_t> states() const { return {states_.data(), size_}; }

  /// Saturating +1 where `up` is set, -1 where `down` is set.
  void step(const BitVector& up, const BitVector& down);

  friend bool operator==(const AutomatonTeam&, const AutomatonTeam&) = default;

 private:
  void refresh_mask();

  std::size_t size_ = 0;
  int n_ = 1;
  std::vector<std::int16_t> states_;  // padded to a multiple of 64 with state 1
  BitVector included_;
};

}  // namespace tmboot
