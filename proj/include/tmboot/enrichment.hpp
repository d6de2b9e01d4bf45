#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmboot/corpus.hpp"
#include "tmboot/ntm.hpp"

namespace tmboot {

class EnrichmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PresenceRule {
  kAttribution,  // indicator = sub-intent predicted
  kLexical,      // indicator = sub-intent predicted and literal present in the text
};

std::string_view presence_rule_name(PresenceRule rule);
PresenceRule parse_presence_rule(std::string_view name);

struct InjectedIndicator {
  std::size_t subintent = 0;  // index into the NTM's sub-intents
  std::size_t literal = 0;    // base vocabulary index
  std::string name;           // "<slug>::<literal>"
};

std::string indicator_name(const SubIntent& si, std::string_view literal);

/// Base vocabulary of width n followed by m injected indicators, ordered by
/// the NTM's sub-intent order and then by each feature group's literal order.
class EnrichedVocabulary {
 public:
  EnrichedVocabulary() = default;
  /// `groups_vocab_hash` is the vocabulary the groups were extracted under.
  EnrichedVocabulary(Vocabulary base, const NTMModel& ntm, const std::vector<FeatureGroup>& groups,
                     const std::string& groups_vocab_hash, PresenceRule rule = PresenceRule::kAttribution);

  const Vocabulary& base() const { return base_; }
  const std::vector<InjectedIndicator>& injected() const { return injected_; }
  std::size_t width() const { return base_.size() + injected_.size(); }
  PresenceRule rule() const { return rule_; }
  const std::string& ntm_config_hash() const { return ntm_config_hash_; }

  /// Feature names of the full width; injected names cannot collide with
  /// base tokens because the tokenizer never produces ':'.
  Vocabulary as_vocabulary() const;

  /// Indicator positions (relative to the injected block) for one sub-intent.
  const std::vector<std::size_t>& indicators_of(std::size_t subintent) const { return by_subintent_[subintent]; }

 private:
  Vocabulary base_;
  std::vector<InjectedIndicator> injected_;
  std::vector<std::vector<std::size_t>> by_subintent_;
  PresenceRule rule_ = PresenceRule::kAttribution;
  std::string ntm_config_hash_;
};

using EnrichedVector = BitVector;

EnrichedVector enrich_vector(const BowVector& base, const NTMModel& ntm, const EnrichedVocabulary& ev);
EnrichedVector enrich_example(std::string_view text, const NTMModel& ntm, const EnrichedVocabulary& ev);

struct ActivationStats {
  std::vector<std::size_t> predicted;  // per sub-intent: samples where it was predicted
  std::vector<std::size_t> injected;   // per sub-intent: samples with at least one bit set
  std::size_t samples_with_injection = 0;
  std::size_t total = 0;
};

struct EnrichedDataset {
  EnrichedVocabulary vocab;
  std::vector<EnrichedVector> vectors;
  std::vector<LabeledExample> examples;
  ActivationStats stats;
};

/// Order-preserving and deterministic.
EnrichedDataset enrich_dataset(const std::vector<LabeledExample>& dataset, const EnrichedVocabulary& ev,
                               const NTMModel& ntm);

// "enriched-vocab-v1": header, then one injected indicator name per line.
void save_enriched_vocabulary(const std::filesystem::path& path, const EnrichedVocabulary& ev);
/// Re-validates against the base vocabulary and NTM it was written for.
EnrichedVocabulary load_enriched_vocabulary(const std::filesystem::path& path, const Vocabulary& base,
                                            const NTMModel& ntm);

/// Dataset records plus an "injected" array naming the set indicators.
void save_enriched_dataset(const std::filesystem::path& path, const EnrichedDataset& data);
/// Rebuilds the vectors from text and the recorded indicators.
EnrichedDataset load_enriched_dataset(const std::filesystem::path& path, const EnrichedVocabulary& ev);

}  // namespace tmboot
