#include "tmboot/tm.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "tmboot/feedback.hpp"
#include "tmboot/simd.hpp"

namespace tmboot {

void TMHyperParams::validate() const {
  if (num_classes < 1) throw std::invalid_argument("num_classes must be >= 1");
  if (clauses_per_class < 2 || clauses_per_class % 2 != 0) {
    throw std::invalid_argument("clauses_per_class must be even and >= 2");
  }
  if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (!(specificity > 1.0)) throw std::invalid_argument("specificity must be > 1");
  if (states_per_action < 1 || states_per_action > 16383) {
    throw std::invalid_argument("states_per_action must be in [1, 16383]");
  }
}

TMModel::TMModel(TMHyperParams params, std::size_t num_features, std::string vocab_hash,
                 std::vector<std::string> class_names)
    : params_(params),
      num_features_(num_features),
      vocab_hash_(std::move(vocab_hash)),
      class_names_(std::move(class_names)) {
  params_.validate();
  if (class_names_.empty()) {
    for (std::size_t c = 0; c < params_.num_classes; ++c) class_names_.push_back(std::to_string(c));
  }
  if (class_names_.size() != params_.num_classes) {
    throw std::invalid_argument("class_names size does not match num_classes");
  }
  banks_.resize(params_.num_classes);
  for (auto& bank : banks_) {
    bank.reserve(params_.clauses_per_class);
    for (std::size_t j = 0; j < params_.clauses_per_class; ++j) {
      bank.push_back(Clause{AutomatonTeam(num_features, params_.states_per_action),
                            AutomatonTeam(num_features, params_.states_per_action),
                            j % 2 == 0 ? +1 : -1, 1});
    }
  }
}

std::size_t TMModel::class_index(const std::string& label) const {
  const auto it = std::find(class_names_.begin(), class_names_.end(), label);
  if (it == class_names_.end()) throw ModelError("unknown class label '" + label + "'");
  return static_cast<std::size_t>(it - class_names_.begin());
}

bool evaluate_clause(const Clause& clause, const BowVector& x, EvalMode mode) {
  if (x.size() != clause.include.size()) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " does not match clause length " +
                                std::to_string(clause.include.size()));
  }
  if (mode == EvalMode::kInference && clause.empty()) return false;
  return simd::active().clause_fires(clause.include.include_mask().words().data(),
                                     clause.negate.include_mask().words().data(),
                                     x.words().data(), x.word_count());
}

int class_score(const TMModel& model, std::size_t cls, const BowVector& x, EvalMode mode) {
  const bool weighted = model.params().weighted;
  int score = 0;
  for (const Clause& c : model.bank(cls)) {
    if (evaluate_clause(c, x, mode)) score += c.polarity * (weighted ? c.weight : 1);
  }
  return score;
}

std::vector<int> class_scores(const TMModel& model, const BowVector& x, EvalMode mode) {
  std::vector<int> scores(model.num_classes());
  for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = class_score(model, c, x, mode);
  return scores;
}

std::size_t predict(const TMModel& model, const BowVector& x) {
  const auto scores = class_scores(model, x);
  // max_element returns the first maximum, which is the lowest index.
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

void enforce_disjoint(Clause& clause, const BitVector& include_moved_up,
                      const BitVector& negate_moved_up) {
  const auto inc = clause.include.include_mask().words();
  const auto neg = clause.negate.include_mask().words();
  for (std::size_t w = 0; w < inc.size(); ++w) {
    std::uint64_t both = inc[w] & neg[w];
    while (both != 0) {
      const std::size_t k = w * 64 + static_cast<std::size_t>(std::countr_zero(both));
      both &= both - 1;
      const int boundary = clause.include.states_per_action();
      if (negate_moved_up.test(k) && !include_moved_up.test(k)) {
        clause.include.set_state(k, boundary);
      } else {
        clause.negate.set_state(k, boundary);
      }
    }
  }
}

namespace {

BitVector complement(const BowVector& x) {
  BitVector out = BitVector::all_ones(x.size());
  auto ow = out.words();
  auto xw = x.words();
  for (std::size_t w = 0; w < ow.size(); ++w) ow[w] &= ~xw[w];
  return out;
}

void apply_clause_table(Clause& clause, const BowVector& x, const FeedbackTable& table, Rng& rng) {
  const bool out = evaluate_clause(clause, x, EvalMode::kLearning);
  BitVector inc_up;
  BitVector neg_up;
  apply_feedback(clause.include, table, out, x, rng, &inc_up);
  apply_feedback(clause.negate, table, out, complement(x), rng, &neg_up);
  enforce_disjoint(clause, inc_up, neg_up);
}

}  // namespace

void type_i_feedback(Clause& clause, const BowVector& x, Rng& rng, double s) {
  apply_clause_table(clause, x, type_i_table(s), rng);
}

void type_ii_feedback(Clause& clause, const BowVector& x) {
  if (!evaluate_clause(clause, x, EvalMode::kLearning)) return;
  static const FeedbackTable table = type_ii_table();
  Rng unused(0);
  apply_clause_table(clause, x, table, unused);
}

namespace {

struct BankPass {
  std::vector<char> fired;
  int vote = 0;
};

BankPass learning_pass(const TMModel& model, std::size_t cls, const BowVector& x) {
  BankPass pass;
  const auto& bank = model.bank(cls);
  pass.fired.resize(bank.size());
  const bool weighted = model.params().weighted;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    pass.fired[j] = evaluate_clause(bank[j], x, EvalMode::kLearning);
    if (pass.fired[j]) pass.vote += bank[j].polarity * (weighted ? bank[j].weight : 1);
  }
  return pass;
}

// `reinforce` selects the scheme: the target class reinforces positive
// clauses (Type I) and corrects negative ones (Type II); the sampled
// negative class does the reverse.
void feed_bank(TMModel& model, std::size_t cls, const BowVector& x, const BankPass& pass,
               double probability, bool reinforce, const FeedbackTable& type_i, Rng& rng) {
  auto& bank = model.bank(cls);
  const bool weighted = model.params().weighted;
  for (std::size_t j = 0; j < bank.size(); ++j) {
    if (!(rng.uniform() < probability)) continue;
    Clause& clause = bank[j];
    const bool positive = clause.polarity > 0;
    if (positive == reinforce) {
      apply_clause_table(clause, x, type_i, rng);
      if (weighted && pass.fired[j]) ++clause.weight;
    } else if (pass.fired[j]) {
      type_ii_feedback(clause, x);
      if (weighted && clause.weight > 0) --clause.weight;
    }
  }
}

}  // namespace

void train_step(TMModel& model, const BowVector& x, std::size_t label, Rng& rng) {
  const auto& p = model.params();
  if (label >= model.num_classes()) throw std::out_of_range("label out of range");
  if (x.size() != model.num_features()) throw std::invalid_argument("input length mismatch");

  bool has_negative = model.num_classes() > 1;
  std::size_t negative = label;
  if (has_negative) {
    const auto r = static_cast<std::size_t>(rng.below(model.num_classes() - 1));
    negative = r >= label ? r + 1 : r;
  }

  const BankPass target = learning_pass(model, label, x);
  BankPass other;
  if (has_negative) other = learning_pass(model, negative, x);

  const double t = p.threshold;
  const FeedbackTable type_i = type_i_table(p.specificity);

  const double vt = std::clamp<double>(target.vote, -t, t);
  feed_bank(model, label, x, target, (t - vt) / (2 * t), true, type_i, rng);

  if (has_negative) {
    const double vn = std::clamp<double>(other.vote, -t, t);
    feed_bank(model, negative, x, other, (t + vn) / (2 * t), false, type_i, rng);
  }
}

FitResult fit(TMModel& model, const std::vector<BowVector>& xs,
              const std::vector<std::size_t>& labels, std::size_t epochs, std::uint64_t seed) {
  if (xs.empty()) throw std::invalid_argument("fit: empty dataset");
  if (xs.size() != labels.size()) throw std::invalid_argument("fit: xs/labels size mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != model.num_features()) {
      throw ModelError("fit: example " + std::to_string(i) + " has " +
                       std::to_string(xs[i].size()) + " features, model expects " +
                       std::to_string(model.num_features()));
    }
    if (labels[i] >= model.num_classes()) throw ModelError("fit: label out of range");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  FitResult result;
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle(order, rng);
    for (std::size_t i : order) train_step(model, xs[i], labels[i], rng);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) correct += predict(model, xs[i]) == labels[i];
    result.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(xs.size()));
  }
  return result;
}

FitResult fit(TMModel& model, const std::vector<LabeledExample>& dataset, const Vocabulary& vocab,
              std::size_t epochs, std::uint64_t seed) {
  if (vocab.hash() != model.vocab_hash() || vocab.size() != model.num_features()) {
    throw ModelError("fit: vocabulary " + vocab.hash() + " does not match model binding " +
                     model.vocab_hash());
  }
  std::vector<BowVector> xs;
  std::vector<std::size_t> labels;
  xs.reserve(dataset.size());
  for (const auto& ex : dataset) {
    xs.push_back(binarize(ex.text, vocab));
    labels.push_back(model.class_index(ex.label));
  }
  return fit(model, xs, labels, epochs, seed);
}

}  // namespace tmboot
