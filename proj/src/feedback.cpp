#include "tmboot/feedback.hpp"

#include <stdexcept>

namespace tmboot {

namespace {

FeedbackCell cell(double reward, double inaction, double penalty) {
  return FeedbackCell{reward, inaction, penalty, true};
}

FeedbackCell unreachable() { return FeedbackCell{0.0, 1.0, 0.0, false}; }

bool is_binary(double p) { return p == 0.0 || p == 1.0; }

}  // namespace

bool FeedbackTable::deterministic() const {
  for (const auto& c : cells_) {
    if (c.reachable && !(is_binary(c.reward) && is_binary(c.penalty))) return false;
  }
  return true;
}

FeedbackTable type_i_table(double s) {
  const double hi = (s - 1.0) / s;
  const double lo = 1.0 / s;
  FeedbackTable t;
  t.at(true, true, true) = cell(hi, lo, 0.0);
  t.at(true, true, false) = unreachable();
  t.at(true, false, true) = cell(0.0, hi, lo);
  t.at(true, false, false) = cell(0.0, hi, lo);
  t.at(false, true, true) = cell(0.0, lo, hi);
  t.at(false, true, false) = cell(lo, hi, 0.0);
  t.at(false, false, true) = cell(lo, hi, 0.0);
  t.at(false, false, false) = cell(lo, hi, 0.0);
  return t;
}

FeedbackTable boosted_type_i_table(double s) {
  FeedbackTable t = type_i_table(s);
  // Only the cell where an included literal contributes to a firing clause
  // is boosted. Keeping the clause=0 penalty is what lets a clause shed
  // literals it picked up from its first sample.
  t.at(true, true, true) = cell(1.0, 0.0, 0.0);
  return t;
}

FeedbackTable type_ii_table() {
  FeedbackTable t;
  t.at(true, true, true) = cell(0.0, 1.0, 0.0);
  t.at(true, true, false) = unreachable();
  t.at(true, false, true) = cell(0.0, 1.0, 0.0);
  t.at(true, false, false) = cell(0.0, 1.0, 0.0);
  t.at(false, true, true) = cell(0.0, 1.0, 0.0);
  t.at(false, true, false) = cell(0.0, 0.0, 1.0);
  t.at(false, false, true) = cell(0.0, 1.0, 0.0);
  t.at(false, false, false) = cell(0.0, 1.0, 0.0);
  return t;
}

int state_direction(bool included, Transition t) {
  const int toward_current = included ? +1 : -1;
  switch (t) {
    case Transition::kReward: return toward_current;
    case Transition::kPenalty: return -toward_current;
    case Transition::kInaction: return 0;
  }
  return 0;
}

Transition sample_transition(const FeedbackCell& c, double u) {
  if (u < c.reward) return Transition::kReward;
  if (u < c.reward + c.penalty) return Transition::kPenalty;
  return Transition::kInaction;
}

void apply_feedback(AutomatonTeam& team, const FeedbackTable& table, bool clause_output,
                    const BitVector& literals, Rng& rng, BitVector* incremented) {
  const std::size_t n = team.size();
  if (literals.size() != n) throw std::invalid_argument("literal vector length mismatch");
  BitVector up(n);
  BitVector down(n);
  const BitVector& inc = team.include_mask();

  if (table.deterministic()) {
    const BitVector valid = BitVector::all_ones(n);
    auto iw = inc.words();
    auto lw = literals.words();
    auto vw = valid.words();
    for (int a = 0; a < 2; ++a) {
      for (int l = 0; l < 2; ++l) {
        const FeedbackCell& c = table.at(a == 1, clause_output, l == 1);
        const int dir_reward = state_direction(a == 1, Transition::kReward);
        for (std::size_t w = 0; w < vw.size(); ++w) {
          const std::uint64_t m = (a ? iw[w] : ~iw[w]) & (l ? lw[w] : ~lw[w]) & vw[w];
          if (m == 0) continue;
          if (!c.reachable) throw std::logic_error("feedback reached an unreachable table cell");
          std::uint64_t move_up = 0;
          std::uint64_t move_down = 0;
          if (c.reward == 1.0) (dir_reward > 0 ? move_up : move_down) |= m;
          if (c.penalty == 1.0) (dir_reward > 0 ? move_down : move_up) |= m;
          up.words()[w] |= move_up;
          down.words()[w] |= move_down;
        }
      }
    }
  } else {
    const FeedbackCell* cells[2][2] = {
        {&table.at(false, clause_output, false), &table.at(false, clause_output, true)},
        {&table.at(true, clause_output, false), &table.at(true, clause_output, true)}};
    for (std::size_t k = 0; k < n; ++k) {
      const bool included = inc.test(k);
      const FeedbackCell& c = *cells[included][literals.test(k)];
      if (!c.reachable) throw std::logic_error("feedback reached an unreachable table cell");
      const int dir = state_direction(included, sample_transition(c, rng.uniform()));
      if (dir > 0) {
        up.set(k);
      } else if (dir < 0) {
        down.set(k);
      }
    }
  }
  team.step(up, down);
  if (incremented != nullptr) *incremented = std::move(up);
}

}  // namespace tmboot
