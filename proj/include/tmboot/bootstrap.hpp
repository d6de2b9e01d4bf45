#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tmboot/corpus.hpp"
#include "tmboot/provider.hpp"
#include "tmboot/subintent.hpp"

namespace tmboot {

enum class Stage { kDiscovery, kSeed, kCore, kEnriched };

std::string_view stage_name(Stage stage);
Stage parse_stage(std::string_view name);

/// Template text compiled in from prompts/<stage>.txt.
std::string_view builtin_prompt_body(Stage stage);

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PromptTemplate {
  Stage stage = Stage::kSeed;
  std::string body;  // placeholders are {NAME}

  static PromptTemplate builtin(Stage stage);
  /// Loads `<dir>/<stage>.txt`.
  static PromptTemplate load(const std::filesystem::path& dir, Stage stage);

  /// Distinct placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every {NAME}; throws PromptError naming the first unbound one.
std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

/// "- a\n- b" as used for the {EXAMPLES} slot.
std::string format_examples(const std::vector<std::string>& examples);

class SubIntentParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string text;
  std::string reason;
};

struct ParsedSubIntents {
  std::vector<SubIntent> subintents;
  std::vector<RejectedLine> rejected;
  std::size_t duplicates = 0;
};

/// One sub-intent per non-empty `<label>_due_to: <explanation>` line.
/// Case-insensitive duplicates are dropped; other lines are reported in
/// `rejected`. Throws SubIntentParseError when no line is valid.
ParsedSubIntents parse_sub_intents(std::string_view response);

struct GenerationConfig {
  std::size_t seed_count = 50;
  std::size_t core_count = 50;
  std::size_t enriched_count = 100;
  double nucleus_p = 0.9;
  double temperature = 0.7;
  std::string provider = "stub";
  std::size_t anchor_count = 2;  // examples embedded in each stage prompt
  std::size_t retry_budget = 5;  // re-queries per stage

  void validate() const;
  std::size_t count(Stage stage) const;
  std::size_t samples_per_subintent() const { return seed_count + core_count + enriched_count; }
  SamplingParams sampling() const { return {nucleus_p, temperature}; }
  /// Stable hash of every field.
  std::string hash() const;
};

struct SampleCheck {
  bool ok = true;
  std::string reason;
  explicit operator bool() const { return ok; }
};

inline constexpr std::size_t kMinSampleWords = 15;

/// Pass iff >= 15 whitespace-separated words, a single line, no list marker
/// and no leading label ("Label:", "positive_due_to_plot:", ...).
SampleCheck validate_sample(std::string_view text, Stage stage);

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, Stage stage, std::vector<LabeledExample> partial)
      : std::runtime_error(what), stage_(stage), partial_(std::move(partial)) {}
  Stage stage() const { return stage_; }
  const std::vector<LabeledExample>& partial() const { return partial_; }

 private:
  Stage stage_;
  std::vector<LabeledExample> partial_;
};

struct StageRequest {
  Stage stage = Stage::kSeed;
  SubIntent subintent;
  /// Seed: real examples of the parent class; core: seed outputs;
  /// enriched: core outputs. The first anchor_count are embedded.
  std::vector<std::string> anchors;
};

/// Query the provider until `config.count(stage)` valid samples are collected
/// or the retry budget runs out. `prompts`, when given, receives every
/// rendered prompt in order.
std::vector<LabeledExample> generate_stage(const StageRequest& request, const GenerationConfig& config,
                                           Provider& provider,
                                           const PromptTemplate* tmpl = nullptr,
                                           std::vector<std::string>* prompts = nullptr);

struct Provenance {
  std::string provider_id;
  std::string config_hash;
  std::string timestamp;  // ISO-8601 UTC; honours SOURCE_DATE_EPOCH
};

struct SubIntentSamples {
  SubIntent subintent;
  std::vector<LabeledExample> seed;
  std::vector<LabeledExample> core;
  std::vector<LabeledExample> enriched;

  const std::vector<LabeledExample>& stage(Stage s) const;
};

struct SyntheticCorpus {
  std::vector<SubIntentSamples> entries;
  Provenance provenance;

  std::vector<SubIntent> subintents() const;
  /// Every sample, sub-intent by sub-intent, stages in curriculum order.
  std::vector<LabeledExample> all_examples() const;
};

/// Runs seed -> core -> enriched for each sub-intent. `real_examples` maps
/// a parent label to its real texts (seed-stage anchors).
SyntheticCorpus generate_corpus(const std::vector<SubIntent>& subintents,
                                const std::map<std::string, std::vector<std::string>>& real_examples,
                                const GenerationConfig& config, Provider& provider,
                                const std::filesystem::path& prompt_dir = {});

/// Discovery prompt -> provider -> parsed sub-intents, keeping at most
/// `max_per_class` per parent label (0 keeps all).
ParsedSubIntents discover_sub_intents(const Bindings& bindings, Provider& provider,
                                      const GenerationConfig& config, std::size_t max_per_class,
                                      const std::filesystem::path& prompt_dir = {});

// Layout: <dir>/<slug>/{seed,core,enriched}.jsonl plus <dir>/manifest.
void save_corpus(const std::filesystem::path& dir, const SyntheticCorpus& corpus,
                 const GenerationConfig& config);

/// Loads and re-validates every sample; stage counts must match the manifest.
SyntheticCorpus load_corpus(const std::filesystem::path& dir);

std::string current_timestamp();

void save_sub_intents(const std::filesystem::path& path, const std::vector<SubIntent>& subintents);
std::vector<SubIntent> load_sub_intents(const std::filesystem::path& path);

}  // namespace tmboot
