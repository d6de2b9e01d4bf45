#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmboot/bootstrap.hpp"
#include "tmboot/corpus.hpp"
#include "tmboot/enrichment.hpp"
#include "tmboot/ntm.hpp"
#include "tmboot/provider.hpp"
#include "tmboot/tm.hpp"

namespace tmboot {

/// Error carrying the pipeline stage it came from; what() is "[stage] cause".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error("[" + stage + "] " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ProviderSettings {
  std::string kind = "stub";            // stub | replay | http
  std::filesystem::path stub_config;    // stub: keyword pools (JSON)
  std::filesystem::path replay_dir;     // replay: recorded responses
  std::filesystem::path record_dir;     // optional: record every exchange here
};

std::unique_ptr<Provider> make_provider(const ProviderSettings& settings);
/// Stable identity of the provider's behaviour (stub config contents, replay
/// directory, or endpoint+model). Never includes credentials.
std::string provider_identity(const ProviderSettings& settings);

struct PipelineConfig {
  std::filesystem::path train;
  std::filesystem::path test;
  /// Sub-intent list, one `label_due_to: explanation` per line. When empty
  /// the discovery prompt is sent to the provider instead.
  std::filesystem::path subintents;
  std::string dataset_name;
  std::string domain_description;
  std::size_t max_subintents_per_class = 0;
  std::filesystem::path prompt_dir;  // empty: built-in templates

  ProviderSettings provider;
  GenerationConfig generation;
  VocabularyParams vocab;
  NtmParams ntm;
  std::size_t ntm_epochs = 20;
  int delta = 5;
  TMHyperParams tm;  // num_classes is taken from the training labels
  std::size_t tm_epochs = 20;
  bool enrich = true;
  PresenceRule presence = PresenceRule::kAttribution;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;

  /// Relative paths are resolved against `base_dir`.
  static PipelineConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  std::string to_json() const;

  /// Checks parameters, that every referenced input path exists and that
  /// seeds were given.
  void validate() const;
};

/// Maps text to the input space of a TM: the base vocabulary alone, or the
/// base vocabulary followed by NTM-derived indicators.
class FeatureSpace {
 public:
  explicit FeatureSpace(Vocabulary base);
  FeatureSpace(std::shared_ptr<const NTMModel> ntm, EnrichedVocabulary ev);

  BowVector encode(std::string_view text) const;
  /// One name per input feature.
  const Vocabulary& names() const { return names_; }
  bool enriched() const { return ntm_ != nullptr; }

 private:
  Vocabulary base_;
  std::shared_ptr<const NTMModel> ntm_;
  EnrichedVocabulary ev_;
  Vocabulary names_;
};

struct EvalReport {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
  std::vector<std::string> class_names;
  std::vector<double> precision;  // per class; 0 when the class is never predicted
  std::vector<double> recall;     // per class; 0 when the class has no test samples
  std::vector<std::size_t> support;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t total = 0;
  std::map<std::string, std::string> metadata;

  std::string to_json() const;
};

/// Throws std::invalid_argument on an empty test set or unknown label.
EvalReport evaluate(const TMModel& model, const std::vector<BowVector>& xs, const std::vector<std::string>& labels);
EvalReport evaluate(const TMModel& model, const std::vector<LabeledExample>& test, const FeatureSpace& space);

struct ExplainedLiteral {
  std::size_t feature = 0;
  bool negated = false;
  std::string name;
};

struct ExplainedClause {
  std::size_t index = 0;
  int polarity = 1;
  std::int32_t weight = 1;
  std::vector<ExplainedLiteral> literals;
  std::string text;  // "plot ∧ twist ∧ ¬boring"
};

struct Explanation {
  std::size_t predicted = 0;
  std::string predicted_label;
  std::vector<int> scores;
  /// Clauses of the predicted class that fire on the input (inference mode).
  std::vector<ExplainedClause> clauses;

  std::string to_json() const;
};

Explanation explain(const TMModel& model, const BowVector& x, const Vocabulary& names);

struct SeedResult {
  std::uint64_t seed = 0;
  EvalReport report;
  std::filesystem::path dir;
};

struct RunSummary {
  std::vector<SeedResult> runs;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double micro_f1_mean = 0.0;
  double micro_f1_std = 0.0;
  std::vector<std::string> skipped;  // "stage" or "stage@seed-N" reused from disk

  std::string to_json() const;
};

struct RunOptions {
  /// Rebuild stages whose artifacts were produced under a different config.
  bool force = false;
  /// Progress lines ("[stage] ..."); may be null.
  std::ostream* log = nullptr;
};

/// discover/subintents -> generate -> build-vocab -> per seed: train-ntm ->
/// extract-features -> enrich -> train-tm -> eval. Artifacts go under
/// output_dir; a stage is skipped when its artifacts carry the expected
/// config hash and rebuilt when absent. Errors are StageError.
RunSummary run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

}  // namespace tmboot
