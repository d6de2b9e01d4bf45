#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmboot {

struct SamplingParams {
  double nucleus_p = 0.9;
  double temperature = 0.7;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-generation backend: one prompt in, one completion out.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const std::string& prompt, const SamplingParams& params) = 0;
};

/// Keyword pool for one sub-intent of the offline stub.
struct StubIntent {
  std::string name;  // "label_due_to: explanation"
  std::vector<std::string> keywords;
  /// Used instead of `keywords` for the enriched stage when non-empty.
  std::vector<std::string> enriched_keywords;
};

struct StubConfig {
  std::vector<StubIntent> intents;
  std::vector<std::string> filler;  // empty: built-in generic word list
  std::uint64_t seed = 7;
  std::size_t min_keywords = 4;
  std::size_t max_keywords = 6;
  std::size_t min_words = 16;
  std::size_t max_words = 20;
  /// Fraction of emitted lines that are deliberately malformed.
  double noise_rate = 0.0;
};

StubConfig parse_stub_config(std::string_view json_text);
std::string stub_config_json(const StubConfig& config);

const std::vector<std::string>& builtin_filler_words();

/// Deterministic provider. Answers discovery prompts with the configured
/// sub-intent names; answers generation prompts with sentences mixing the
/// category's keyword pool into filler text. Output is a pure function of
/// (config, prompt).
class StubProvider final : public Provider {
 public:
  explicit StubProvider(StubConfig config);
  std::string id() const override { return "stub"; }
  std::string complete(const std::string& prompt, const SamplingParams& params) override;
  const StubConfig& config() const { return config_; }

 private:
  StubConfig config_;
};

/// Key under which a prompt's response is recorded.
std::string prompt_key(const std::string& prompt);

/// Reads recorded responses from `<dir>/<prompt_key>.txt`.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::filesystem::path dir);
  std::string id() const override { return "replay"; }
  std::string complete(const std::string& prompt, const SamplingParams& params) override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to another provider and records each exchange for replay.
class RecordingProvider final : public Provider {
 public:
  RecordingProvider(Provider& inner, std::filesystem::path dir);
  std::string id() const override { return inner_.id(); }
  std::string complete(const std::string& prompt, const SamplingParams& params) override;

 private:
  Provider& inner_;
  std::filesystem::path dir_;
};

/// OpenAI-compatible chat-completions endpoint. Configured from
/// TMBOOT_LLM_ENDPOINT (full URL), TMBOOT_LLM_API_KEY and TMBOOT_LLM_MODEL.
class HttpProvider final : public Provider {
 public:
  HttpProvider(std::string endpoint, std::string api_key, std::string model);
  static HttpProvider from_env();

  std::string id() const override { return "http"; }
  std::string complete(const std::string& prompt, const SamplingParams& params) override;
  /// Hash of endpoint and model; the credential is never included.
  std::string identity_hash() const;

 private:
  std::string endpoint_;
  std::string api_key_;
  std::string model_;
};

}  // namespace tmboot
