#pragma once

#include <array>

#include "tmboot/automaton.hpp"
#include "tmboot/rng.hpp"

namespace tmboot {

enum class Transition { kReward, kInaction, kPenalty };

/// Transition probabilities for one (action, clause output, literal value)
/// cell. Unreachable cells (an included literal of value 0 inside a firing
/// clause) must never be looked up.
struct FeedbackCell {
  double reward = 0.0;
  double inaction = 1.0;
  double penalty = 0.0;
  bool reachable = true;
};

/// Feedback table indexed by TA action, clause output and literal value.
class FeedbackTable {
 public:
  const FeedbackCell& at(bool included, bool clause_output, bool literal) const {
    return cells_[index(included, clause_output, literal)];
  }
  FeedbackCell& at(bool included, bool clause_output, bool literal) {
    return cells_[index(included, clause_output, literal)];
  }
  /// True when every reachable cell is a 0/1 choice, so no draws are needed.
  bool deterministic() const;

 private:
  static constexpr std::size_t index(bool inc, bool out, bool lit) {
    return (inc ? 4u : 0u) + (out ? 2u : 0u) + (lit ? 1u : 0u);
  }
  std::array<FeedbackCell, 8> cells_{};
};

/// Standard Type I feedback with specificity s.
FeedbackTable type_i_table(double s);

/// Type I where an included literal with value 1 in a firing clause is
/// rewarded with probability 1 (never left inactive or penalised). Every
/// other cell, including the clause=0 column, keeps its standard value.
FeedbackTable boosted_type_i_table(double s);

/// Type II: an excluded literal of value 0 in a firing clause is penalised
/// (pushed toward include) with probability 1; everything else is inaction.
FeedbackTable type_ii_table();

/// Reward moves a TA deeper into its current action, penalty toward the
/// other one. Returns +1 (toward include) or -1.
int state_direction(bool included, Transition t);

/// Pick the transition for one cell from a uniform draw in [0, 1).
Transition sample_transition(const FeedbackCell& cell, double u);

/// Apply `table` to every automaton of `team`. `literals` holds the literal
/// values (x for positive literals, the complement of x for negated ones).
/// Stochastic tables draw exactly one uniform per automaton, in index order;
/// deterministic tables draw nothing. Bits set in `*incremented` mark
/// automata that moved toward include.
void apply_feedback(AutomatonTeam& team, const FeedbackTable& table, bool clause_output,
                    const BitVector& literals, Rng& rng, BitVector* incremented = nullptr);

}  // namespace tmboot
