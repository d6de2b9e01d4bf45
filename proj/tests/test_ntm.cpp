#include <set>

#include "doctest.h"
#include "support.hpp"
#include "tmboot/ntm.hpp"

using namespace tmboot;
using testsupport::bits;

namespace {

std::vector<SubIntent> subs(std::initializer_list<const char*> names) {
  std::vector<SubIntent> out;
  for (const char* n : names) out.push_back(make_sub_intent(n));
  return out;
}

NtmParams small_params(std::size_t clauses = 4) {
  NtmParams p;
  p.clauses_per_subintent = clauses;
  p.threshold = 10;
  p.specificity = 3.0;
  p.states_per_action = 20;
  return p;
}

}  // namespace

TEST_CASE("monotone clause is a conjunction over included features") {
  const Vocabulary v({"championship", "rain", "goal"});
  MonotoneClause c{AutomatonTeam(3, 10), 1};
  c.include.set_state(0, 11);
  c.include.set_state(1, 15);
  CHECK(evaluate_monotone_clause(c, binarize("Championship final delayed by rain", v), EvalMode::kInference));
  CHECK_FALSE(evaluate_monotone_clause(c, binarize("rain all day", v), EvalMode::kInference));

  MonotoneClause empty{AutomatonTeam(3, 10), 1};
  CHECK(evaluate_monotone_clause(empty, bits({0, 0, 0}), EvalMode::kLearning));
  CHECK_FALSE(evaluate_monotone_clause(empty, bits({1, 1, 1}), EvalMode::kInference));
  CHECK_THROWS(evaluate_monotone_clause(c, bits({1, 1}), EvalMode::kInference));
}

TEST_CASE("monotone clause matches a subset-membership oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.below(130);
    MonotoneClause c{AutomatonTeam(n, 8), 1};
    std::set<std::size_t> included;
    for (std::size_t k = 0; k < n; ++k) {
      if (rng.chance(0.03)) {
        c.include.set_state(k, 9 + static_cast<int>(rng.below(8)));
        included.insert(k);
      }
    }
    const auto x = testsupport::random_bits(n, rng, 0.9);
    bool subset = !included.empty();
    for (std::size_t k : included) subset = subset && x.test(k);
    REQUIRE(evaluate_monotone_clause(c, x, EvalMode::kInference) == subset);
  }
}

TEST_CASE("boosted feedback always rewards included literals of a firing clause") {
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    MonotoneClause c{AutomatonTeam(6, 10), 1};
    c.include.set_state(0, 12);
    c.include.set_state(1, 11);
    const auto x = bits({1, 1, static_cast<int>(rng.below(2)), 0, 1, 0});
    boosted_type_i_feedback(c, x, rng, 5.0);
    REQUIRE(c.include.state(0) == 13);
    REQUIRE(c.include.state(1) == 12);
    REQUIRE(c.include.state(3) <= 10);
  }
}

TEST_CASE("monotone type II pushes in an absent feature") {
  MonotoneClause c{AutomatonTeam(3, 10), 1};
  c.include.set_state(0, 12);
  c.include.set_state(1, 10);
  monotone_type_ii_feedback(c, bits({1, 0, 1}));
  CHECK(c.include.state(1) == 11);
  CHECK(c.include.state(2) == 10);
  CHECK_FALSE(evaluate_monotone_clause(c, bits({1, 0, 1}), EvalMode::kLearning));
}

TEST_CASE("feature groups use strict threshold, max confidence and stable order") {
  const Vocabulary v({"alpha", "beta", "gamma", "delta", "eps"});
  NTMModel m(small_params(2), 5, v.hash(), subs({"a_due_to: one", "b_due_to: two"}));
  const int n = 20;
  auto& p0 = m.pool(0);
  p0[0].include.set_state(0, n + 9);   // alpha 9
  p0[0].include.set_state(1, n + 5);   // beta 5: not above delta
  p0[1].include.set_state(1, n + 6);   // beta 6 via the other clause
  p0[1].include.set_state(2, n + 9);   // gamma 9, ties alpha
  p0[1].include.set_state(3, n + 12);  // delta 12
  p0[1].include.set_state(0, n + 7);   // alpha again, lower
  const auto groups = extract_feature_groups(m, v, 5);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0].subintent.slug == "a_due_to_one");
  CHECK(groups[0].literals == std::vector<std::string>{"delta", "alpha", "gamma", "beta"});
  CHECK(groups[0].confidence == std::vector<int>{12, 9, 9, 6});
  CHECK(groups[1].literals.empty());

  const auto report = literal_confidence(m, 5);
  CHECK(report.at(0, 0, 0) == 9);
  CHECK(report.at(0, 0, 4) == 0);
  CHECK_THROWS_AS(extract_feature_groups(m, Vocabulary({"x"}), 5), ModelError);
}

TEST_CASE("sub-intent predictions are ranked by weighted score") {
  NTMModel m(small_params(3), 3, "h", subs({"a_due_to: x", "b_due_to: y", "c_due_to: z"}));
  // pool 0: one clause on f0, weight 2. pool 1: two clauses on f0, weights 1.
  // pool 2: clause on f2 only.
  m.pool(0)[0].include.set_state(0, 25);
  m.pool(0)[0].weight = 2;
  m.pool(1)[0].include.set_state(0, 25);
  m.pool(1)[1].include.set_state(0, 25);
  m.pool(2)[0].include.set_state(2, 25);
  const auto preds = predict_sub_intents(m, bits({1, 0, 0}));
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].subintent == 0);  // tie at 2 goes to the lower index
  CHECK(preds[1].subintent == 1);
  CHECK(preds[1].fired_clauses == std::vector<std::size_t>{0, 1});
  CHECK(predict_sub_intents(m, bits({0, 1, 0})).empty());

  m.pool(2)[0].weight = 0;
  CHECK(predict_sub_intents(m, bits({0, 0, 1})).empty());
}

TEST_CASE("NTM model rejects duplicate sub-intents and resolves names") {
  CHECK_THROWS(NTMModel(small_params(), 3, "h", subs({"a_due_to: x", "a_due_to: X"})));
  NTMModel m(small_params(), 3, "h", subs({"a_due_to: x", "b_due_to: y"}));
  CHECK(m.subintent_index("b_due_to: y") == 1);
  CHECK(m.subintent_index("b_due_to_y") == 1);
  CHECK_THROWS_AS(m.subintent_index("c_due_to_z"), ModelError);
}

TEST_CASE("train_ntm recovers disjoint keyword pools and is deterministic") {
  const auto pools = testsupport::planted_pools(2, 5);
  Rng rng(8);
  std::vector<LabeledExample> corpus;
  const auto si = subs({"a_due_to: first", "b_due_to: second"});
  for (int i = 0; i < 300; ++i) {
    const std::size_t p = i % 2;
    std::string text;
    for (const auto& w : pools[p]) {
      if (rng.chance(0.7)) text += w + " ";
    }
    for (int f = 0; f < 6; ++f) text += "filler" + std::to_string(rng.below(30)) + " ";
    corpus.push_back({text, si[p].parent_label, si[p].slug});
  }
  const Vocabulary v = build_vocabulary(corpus);
  NtmParams p = small_params(10);
  p.states_per_action = 50;
  NTMModel a(p, v.size(), v.hash(), si), b(p, v.size(), v.hash(), si);
  const auto ra = train_ntm(a, corpus, v, 10, 3);
  train_ntm(b, corpus, v, 10, 3);
  CHECK(a == b);
  CHECK(ra.epoch_accuracy.back() > 0.9);
  const auto groups = extract_feature_groups(a, v, 5);
  for (std::size_t g = 0; g < 2; ++g) {
    CHECK(std::set<std::string>(groups[g].literals.begin(), groups[g].literals.end()) ==
          std::set<std::string>(pools[g].begin(), pools[g].end()));
  }
}

TEST_CASE("train_ntm validates its corpus") {
  const Vocabulary v({"x", "y"});
  NTMModel m(small_params(), 2, v.hash(), subs({"a_due_to: x"}));
  CHECK_THROWS(train_ntm(m, {}, v, 1, 1));
  CHECK_THROWS_AS(train_ntm(m, {{"x y", "a", {}}}, v, 1, 1), ModelError);
  CHECK_THROWS_AS(train_ntm(m, {{"x y", "a", std::string("b_due_to_q")}}, v, 1, 1), ModelError);
  CHECK_THROWS_AS(train_ntm(m, {{"x y", "a", std::string("a_due_to_x")}}, Vocabulary({"z"}), 1, 1), ModelError);
}

TEST_CASE("featgroups-v1 round trip") {
  testsupport::TempDir dir;
  std::vector<FeatureGroup> g{{make_sub_intent("positive_due_to: plot"), {"plot", "twist"}, {30, 12}},
                              {make_sub_intent("negative_due_to: acting"), {}, {}}};
  save_feature_groups(dir / "fg.txt", g, "vh", "ch");
  const auto back = load_feature_groups(dir / "fg.txt");
  CHECK(back.vocab_hash == "vh");
  CHECK(back.config_hash == "ch");
  CHECK(back.groups == g);
  testsupport::write(dir / "bad.txt", "featgroups-v1\nvocab x\nplot\t3\n");
  CHECK_THROWS_AS(load_feature_groups(dir / "bad.txt"), ModelError);
}
