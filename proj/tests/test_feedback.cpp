#include <array>
#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "tmboot/automaton.hpp"
#include "tmboot/feedback.hpp"

using namespace tmboot;

namespace {

struct Freq {
  double reward = 0, inaction = 0, penalty = 0;
};

// Every automaton starts mid-way into `included`'s half, so a single update
// is observable as +1 / 0 / -1 without saturation.
Freq measure(const FeedbackTable& table, bool included, bool clause_output, bool literal, int trials) {
  constexpr std::size_t kWidth = 500;
  constexpr int kN = 100;
  const int start = included ? kN + 50 : kN - 50;
  BitVector lits(kWidth);
  if (literal) lits = BitVector::all_ones(kWidth);
  Rng rng(991);
  double up = 0, down = 0, total = 0;
  for (int t = 0; t < trials; t += static_cast<int>(kWidth)) {
    AutomatonTeam team(kWidth, kN);
    for (std::size_t k = 0; k < kWidth; ++k) team.set_state(k, start);
    apply_feedback(team, table, clause_output, lits, rng);
    for (std::size_t k = 0; k < kWidth; ++k) {
      up += team.state(k) > start;
      down += team.state(k) < start;
    }
    total += kWidth;
  }
  Freq f;
  const double toward = (included ? up : down) / total;
  const double away = (included ? down : up) / total;
  f.reward = toward;
  f.penalty = away;
  f.inaction = 1.0 - toward - away;
  return f;
}

}  // namespace

TEST_CASE("type I table has the textbook probabilities") {
  const double s = 5.0, hi = 0.8, lo = 0.2;
  const auto t = type_i_table(s);
  auto eq = [](const FeedbackCell& c, double r, double i, double p) {
    CHECK(c.reachable);
    CHECK(c.reward == doctest::Approx(r));
    CHECK(c.inaction == doctest::Approx(i));
    CHECK(c.penalty == doctest::Approx(p));
  };
  eq(t.at(true, true, true), hi, lo, 0);
  CHECK_FALSE(t.at(true, true, false).reachable);
  eq(t.at(true, false, true), 0, hi, lo);
  eq(t.at(true, false, false), 0, hi, lo);
  eq(t.at(false, true, true), 0, lo, hi);
  eq(t.at(false, true, false), lo, hi, 0);
  eq(t.at(false, false, true), lo, hi, 0);
  eq(t.at(false, false, false), lo, hi, 0);
}

TEST_CASE("monte-carlo frequencies follow the type I table") {
  const auto t = type_i_table(5.0);
  for (bool inc : {false, true}) {
    for (bool out : {false, true}) {
      for (bool lit : {false, true}) {
        if (inc && out && !lit) continue;
        CAPTURE(inc);
        CAPTURE(out);
        CAPTURE(lit);
        const Freq f = measure(t, inc, out, lit, 20000);
        const auto& c = t.at(inc, out, lit);
        CHECK(std::abs(f.reward - c.reward) < 0.02);
        CHECK(std::abs(f.penalty - c.penalty) < 0.02);
        CHECK(std::abs(f.inaction - c.inaction) < 0.02);
      }
    }
  }
}

TEST_CASE("boosted table boosts only the firing include cell") {
  const auto std_t = type_i_table(5.0);
  const auto b = boosted_type_i_table(5.0);
  CHECK(b.at(true, true, true).reward == 1.0);
  CHECK(b.at(true, true, true).penalty == 0.0);
  for (bool inc : {false, true}) {
    for (bool out : {false, true}) {
      for (bool lit : {false, true}) {
        if (inc && out) continue;
        CHECK(b.at(inc, out, lit).reward == std_t.at(inc, out, lit).reward);
        CHECK(b.at(inc, out, lit).penalty == std_t.at(inc, out, lit).penalty);
      }
    }
  }
  const Freq f = measure(b, true, true, true, 20000);
  CHECK(f.reward == 1.0);
  CHECK(f.penalty == 0.0);
}

TEST_CASE("type II only pushes excluded zero-literals of a firing clause") {
  const auto t = type_ii_table();
  CHECK(t.deterministic());
  AutomatonTeam team(4, 10);
  team.set_state(0, 5);   // excluded, literal 0 -> +1
  team.set_state(1, 5);   // excluded, literal 1 -> stays
  team.set_state(2, 15);  // included, literal 1 -> stays
  team.set_state(3, 10);  // excluded at the boundary, literal 0 -> becomes included
  Rng rng(1);
  apply_feedback(team, t, true, testsupport::bits({0, 1, 1, 0}), rng);
  CHECK(team.state(0) == 6);
  CHECK(team.state(1) == 5);
  CHECK(team.state(2) == 15);
  CHECK(team.state(3) == 11);
  CHECK(team.included(3));

  apply_feedback(team, t, false, testsupport::bits({0, 0, 0, 0}), rng);
  CHECK(team.state(0) == 6);
}

TEST_CASE("an unreachable cell is a logic error") {
  AutomatonTeam team(2, 10);
  team.set_state(0, 15);
  Rng rng(1);
  CHECK_THROWS_AS(apply_feedback(team, type_i_table(3.0), true, testsupport::bits({0, 0}), rng), std::logic_error);
}

TEST_CASE("states saturate at both ends") {
  AutomatonTeam team(2, 3);
  team.set_state(0, 6);
  team.set_state(1, 1);
  team.step(testsupport::bits({1, 0}), testsupport::bits({0, 1}));
  CHECK(team.state(0) == 6);
  CHECK(team.state(1) == 1);
  CHECK_THROWS(team.set_state(0, 7));
  CHECK_THROWS(team.set_state(0, 0));
}

TEST_CASE("sample_transition partitions the unit interval") {
  const FeedbackCell c{0.3, 0.5, 0.2, true};
  CHECK(sample_transition(c, 0.0) == Transition::kReward);
  CHECK(sample_transition(c, 0.29) == Transition::kReward);
  CHECK(sample_transition(c, 0.3) == Transition::kPenalty);
  CHECK(sample_transition(c, 0.49) == Transition::kPenalty);
  CHECK(sample_transition(c, 0.5) == Transition::kInaction);
  CHECK(state_direction(true, Transition::kReward) == 1);
  CHECK(state_direction(false, Transition::kReward) == -1);
  CHECK(state_direction(true, Transition::kPenalty) == -1);
}
