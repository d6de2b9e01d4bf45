#include "tmboot/automaton.hpp"

#include <stdexcept>
#include <string>

#include "tmboot/simd.hpp"

namespace tmboot {

AutomatonTeam::AutomatonTeam(std::size_t literals, int states_per_action)
    : size_(literals),
      n_(states_per_action),
      states_(BitVector::word_count_for(literals) * 64, 1),
      included_(literals) {
  if (states_per_action < 1 || states_per_action > 16383) {
    throw std::invalid_argument("states_per_action must be in [1, 16383]");
  }
  std::fill(states_.begin(), states_.begin() + static_cast<std::ptrdiff_t>(size_),
            static_cast<std::int16_t>(n_));
}

void AutomatonTeam::set_state(std::size_t k, int value) {
  if (k >= size_) throw std::out_of_range("automaton index " + std::to_string(k));
  if (value < 1 || value > max_state()) {
    throw std::out_of_range("automaton state " + std::to_string(value) + " outside [1, " +
                            std::to_string(max_state()) + "]");
  }
  states_[k] = static_cast<std::int16_t>(value);
  included_.set(k, value > n_);
}

void AutomatonTeam::step(const BitVector& up, const BitVector& down) {
  const auto& kernels = simd::active();
  kernels.step_states(states_.data(), up.words().data(), down.words().data(),
                      included_.word_count(), static_cast<std::int16_t>(max_state()));
  refresh_mask();
}

void AutomatonTeam::refresh_mask() {
  simd::active().include_mask(states_.data(), included_.word_count(),
                              static_cast<std::int16_t>(n_), included_.words().data());
}

}  // namespace tmboot
