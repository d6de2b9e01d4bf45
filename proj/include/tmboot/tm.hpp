#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmboot/automaton.hpp"
#include "tmboot/corpus.hpp"
#include "tmboot/rng.hpp"

namespace tmboot {

struct TMHyperParams {
  std::size_t clauses_per_class = 150;  // even: alternating polarity
  std::size_t num_classes = 2;
  int threshold = 5000;
  double specificity = 5.0;
  int states_per_action = 100;
  std::uint64_t seed = 1;
  bool weighted = true;

  void validate() const;
  friend bool operator==(const TMHyperParams&, const TMHyperParams&) = default;
};

enum class EvalMode {
  kLearning,   // a clause with no included literal outputs 1
  kInference,  // ... and 0
};

struct Clause {
  AutomatonTeam include;  // x_k
  AutomatonTeam negate;   // not x_k
  int polarity = +1;
  std::int32_t weight = 1;

  bool empty() const { return include.include_mask().none() && negate.include_mask().none(); }
  friend bool operator==(const Clause&, const Clause&) = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multi-class Tsetlin machine: one bank of clauses per class, clause j of
/// every bank has polarity +1 when j is even (the 1-based odd clauses) and -1
/// otherwise.
class TMModel {
 public:
  TMModel() = default;
  TMModel(TMHyperParams params, std::size_t num_features, std::string vocab_hash,
          std::vector<std::string> class_names);

  const TMHyperParams& params() const { return params_; }
  std::size_t num_features() const { return num_features_; }
  std::size_t num_classes() const { return banks_.size(); }
  const std::string& vocab_hash() const { return vocab_hash_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  std::size_t class_index(const std::string& label) const;

  const std::vector<Clause>& bank(std::size_t cls) const { return banks_[cls]; }
  std::vector<Clause>& bank(std::size_t cls) { return banks_[cls]; }

  /// Free-form tag (the pipeline stores its stage config hash here).
  const std::string& config_hash() const { return config_hash_; }
  void set_config_hash(std::string h) { config_hash_ = std::move(h); }

  friend bool operator==(const TMModel&, const TMModel&) = default;

 private:
  TMHyperParams params_;
  std::size_t num_features_ = 0;
  std::string vocab_hash_;
  std::vector<std::string> class_names_;
  std::string config_hash_;
  std::vector<std::vector<Clause>> banks_;
};

bool evaluate_clause(const Clause& clause, const BowVector& x, EvalMode mode);

/// Signed, weighted vote sum for `cls` (weights read as 1 when unweighted).
int class_score(const TMModel& model, std::size_t cls, const BowVector& x,
                EvalMode mode = EvalMode::kInference);

std::vector<int> class_scores(const TMModel& model, const BowVector& x,
                              EvalMode mode = EvalMode::kInference);

/// Argmax of class_score; ties go to the lowest class index.
std::size_t predict(const TMModel& model, const BowVector& x);

/// Standard Type I feedback on both automaton teams of `clause`. Draws one
/// uniform per positive automaton, then one per negated automaton.
void type_i_feedback(Clause& clause, const BowVector& x, Rng& rng, double s);

/// Type II feedback; a no-op when the clause does not fire on x.
void type_ii_feedback(Clause& clause, const BowVector& x);

/// One example of online training.
///
/// Draw order: the negative class (one `below(num_classes - 1)` draw, skipped
/// when there is a single class), then for each clause of the target bank in
/// index order a gate draw followed by that clause's Type I draws if it
/// receives Type I, then the same for the negative bank. Vote sums for both
/// banks are computed in learning mode before any update.
void train_step(TMModel& model, const BowVector& x, std::size_t label, Rng& rng);

struct FitResult {
  /// Training-set accuracy measured after each epoch.
  std::vector<double> epoch_accuracy;
};

/// Epoch loop around train_step. Each epoch visits the examples in an order
/// shuffled from the seeded stream.
FitResult fit(TMModel& model, const std::vector<BowVector>& xs,
              const std::vector<std::size_t>& labels, std::size_t epochs, std::uint64_t seed);

FitResult fit(TMModel& model, const std::vector<LabeledExample>& dataset, const Vocabulary& vocab,
              std::size_t epochs, std::uint64_t seed);

/// Resolve include/negate conflicts on one feature: the automaton that moved
/// toward include in this update keeps it, the other is reset to N.
void enforce_disjoint(Clause& clause, const BitVector& include_moved_up,
                      const BitVector& negate_moved_up);

}  // namespace tmboot
