#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tmboot/automaton.hpp"
#include "tmboot/corpus.hpp"
#include "tmboot/rng.hpp"
#include "tmboot/subintent.hpp"
#include "tmboot/tm.hpp"

namespace tmboot {

struct NtmParams {
  std::size_t clauses_per_subintent = 150;
  int threshold = 5000;
  double specificity = 5.0;
  int states_per_action = 100;
  std::uint64_t seed = 1;

  void validate() const;
  friend bool operator==(const NtmParams&, const NtmParams&) = default;
};

/// Positive-literal-only clause. There is no negated automaton team.
struct MonotoneClause {
  AutomatonTeam include;
  std::int32_t weight = 1;

  bool empty() const { return include.include_mask().none(); }
  friend bool operator==(const MonotoneClause&, const MonotoneClause&) = default;
};

class NTMModel {
 public:
  NTMModel() = default;
  NTMModel(NtmParams params, std::size_t num_features, std::string vocab_hash,
           std::vector<SubIntent> subintents);

  const NtmParams& params() const { return params_; }
  std::size_t num_features() const { return num_features_; }
  const std::string& vocab_hash() const { return vocab_hash_; }
  const std::vector<SubIntent>& subintents() const { return subintents_; }
  std::size_t num_pools() const { return pools_.size(); }

  /// Index of a sub-intent by name or slug.
  std::size_t subintent_index(std::string_view name_or_slug) const;

  const std::vector<MonotoneClause>& pool(std::size_t i) const { return pools_[i]; }
  std::vector<MonotoneClause>& pool(std::size_t i) { return pools_[i]; }

  const std::string& config_hash() const { return config_hash_; }
  void set_config_hash(std::string h) { config_hash_ = std::move(h); }

  friend bool operator==(const NTMModel&, const NTMModel&) = default;

 private:
  NtmParams params_;
  std::size_t num_features_ = 0;
  std::string vocab_hash_;
  std::vector<SubIntent> subintents_;
  std::string config_hash_;
  std::vector<std::vector<MonotoneClause>> pools_;
};

bool evaluate_monotone_clause(const MonotoneClause& clause, const BowVector& x, EvalMode mode);

/// Type I with the boosted include row (see boosted_type_i_table). One
/// uniform per automaton in index order.
void boosted_type_i_feedback(MonotoneClause& clause, const BowVector& x, Rng& rng, double s);

/// Unchanged Type II; a no-op when the clause does not fire.
void monotone_type_ii_feedback(MonotoneClause& clause, const BowVector& x);

/// One training example: the target pool gets boosted Type I with gate
/// probability (T - v)/(2T), one other pool (uniformly drawn) gets Type II on
/// its firing clauses with probability (T + v')/(2T). v counts firing
/// clauses (learning mode, unweighted); weights move +1 on Type I to a
/// firing clause and -1 (floor 0) on Type II, and only affect ranking.
void ntm_train_step(NTMModel& model, const BowVector& x, std::size_t pool, Rng& rng);

/// Trains on synthetic samples whose `sub_intent` names a pool of `model`.
FitResult train_ntm(NTMModel& model, const std::vector<LabeledExample>& corpus,
                    const Vocabulary& vocab, std::size_t epochs, std::uint64_t seed);

struct ConfidenceReport {
  int delta = 5;
  std::size_t num_features = 0;
  /// conf[pool][clause * num_features + k] = max(0, state - N)
  std::vector<std::vector<int>> conf;

  int at(std::size_t pool, std::size_t clause, std::size_t k) const {
    return conf[pool][clause * num_features + k];
  }
};

ConfidenceReport literal_confidence(const NTMModel& model, int delta = 5);

struct FeatureGroup {
  SubIntent subintent;
  /// Ordered by max confidence descending, then lexicographically.
  std::vector<std::string> literals;
  std::vector<int> confidence;  // parallel to literals

  friend bool operator==(const FeatureGroup&, const FeatureGroup&) = default;
};

/// Per pool, the union over clauses of literals with confidence strictly
/// greater than delta.
std::vector<FeatureGroup> extract_feature_groups(const NTMModel& model, const Vocabulary& vocab,
                                                 int delta = 5);

struct SubIntentPrediction {
  std::size_t subintent = 0;
  int score = 0;  // weighted count of firing clauses
  std::vector<std::size_t> fired_clauses;

  friend bool operator==(const SubIntentPrediction&, const SubIntentPrediction&) = default;
};

/// All sub-intents with a positive score, highest first (ties: lower index).
std::vector<SubIntentPrediction> predict_sub_intents(const NTMModel& model, const BowVector& x);

// "featgroups-v1": header lines, then one block per sub-intent:
//   [<sub-intent name>]
//   <literal>\t<confidence>
void save_feature_groups(const std::filesystem::path& path, const std::vector<FeatureGroup>& groups,
                         const std::string& vocab_hash, const std::string& config_hash = {});

struct FeatureGroupFile {
  std::string vocab_hash;
  std::string config_hash;
  std::vector<FeatureGroup> groups;
};
FeatureGroupFile load_feature_groups(const std::filesystem::path& path);

}  // namespace tmboot
