#include "httplib.h"

#include "tmboot/provider.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

#include "json.hpp"
#include "tmboot/hash.hpp"
#include "tmboot/rng.hpp"
#include "tmboot/subintent.hpp"

namespace tmboot {

namespace {

std::uint64_t prompt_stream(const std::string& prompt) {
  return std::stoull(sha256_hex(prompt, 16), nullptr, 16);
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* field) {
  std::vector<std::string> out;
  if (const auto it = j.find(field); it != j.end()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

const std::vector<std::string>& builtin_filler_words() {
  static const std::vector<std::string> words{
      "the", "a", "an", "and", "of", "in", "on", "with", "for", "to", "from", "by", "as",
      "at", "this", "that", "these", "those", "it", "its", "their", "our", "was", "were",
      "is", "are", "has", "have", "had", "been", "being", "while", "during", "after",
      "before", "across", "around", "through", "under", "over", "between", "among",
      "several", "many", "various", "numerous", "some", "most", "other", "another",
      "recent", "new", "old", "early", "late", "current", "previous", "following",
      "overall", "general", "particular", "specific", "notable", "considerable", "clear",
      "broad", "wide", "large", "small", "major", "minor", "main", "key", "central",
      "people", "group", "groups", "team", "teams", "members", "public", "community",
      "report", "reports", "statement", "account", "description", "summary", "note",
      "today", "yesterday", "week", "month", "year", "season", "period", "time", "moment",
      "day", "evening", "morning", "region", "area", "place", "city", "country", "world",
      "part", "side", "case", "point", "issue", "matter", "detail", "aspect", "factor",
      "change", "changes", "trend", "pattern", "level", "range", "number", "amount",
      "also", "still", "already", "again", "often", "usually", "really", "quite",
      "rather", "fairly", "largely", "mostly", "nearly", "almost", "further", "later",
      "described", "noted", "seen", "shown", "found", "made", "given", "taken", "observed",
      "considered", "regarded", "followed", "reported", "expected", "known", "called",
      "way", "manner", "form", "kind", "sort", "type", "instance", "example", "result"};
  return words;
}

StubConfig parse_stub_config(std::string_view json_text) {
  StubConfig config;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("stub config: ") + e.what());
  }
  try {
    config.seed = j.value("seed", config.seed);
    config.min_keywords = j.value("min_keywords", config.min_keywords);
    config.max_keywords = j.value("max_keywords", config.max_keywords);
    config.min_words = j.value("min_words", config.min_words);
    config.max_words = j.value("max_words", config.max_words);
    config.noise_rate = j.value("noise_rate", config.noise_rate);
    config.filler = string_list(j, "filler");
    for (const auto& intent : j.at("intents")) {
      StubIntent si;
      si.name = intent.at("name").get<std::string>();
      si.keywords = string_list(intent, "keywords");
      si.enriched_keywords = string_list(intent, "enriched_keywords");
      if (si.keywords.empty()) throw ProviderError("stub intent '" + si.name + "' has no keywords");
      config.intents.push_back(std::move(si));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("stub config: ") + e.what());
  }
  if (config.min_keywords < 1 || config.min_keywords > config.max_keywords ||
      config.min_words > config.max_words || config.max_keywords > config.min_words) {
    throw ProviderError("stub config: inconsistent keyword / word counts");
  }
  return config;
}

std::string stub_config_json(const StubConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["min_keywords"] = config.min_keywords;
  j["max_keywords"] = config.max_keywords;
  j["min_words"] = config.min_words;
  j["max_words"] = config.max_words;
  j["noise_rate"] = config.noise_rate;
  j["filler"] = config.filler;
  j["intents"] = nlohmann::ordered_json::array();
  for (const auto& si : config.intents) {
    j["intents"].push_back({{"name", si.name},
                            {"keywords", si.keywords},
                            {"enriched_keywords", si.enriched_keywords}});
  }
  return j.dump();
}

StubProvider::StubProvider(StubConfig config) : config_(std::move(config)) {
  if (config_.filler.empty()) config_.filler = builtin_filler_words();
}

std::string StubProvider::complete(const std::string& prompt, const SamplingParams&) {
  if (prompt.find("identify fine-grained sub-intents") != std::string::npos) {
    std::string out;
    for (const auto& si : config_.intents) out += si.name + "\n";
    return out;
  }

  static const std::regex category_re(R"(Category:[ \t]*([^\n]+))");
  static const std::regex count_re(R"([Gg]enerate[ \t]+(\d+)[ \t]+new)");
  std::smatch m;
  if (!std::regex_search(prompt, m, category_re)) throw ProviderError("stub: prompt has no Category line");
  const std::string category = m[1].str();
  if (!std::regex_search(prompt, m, count_re)) throw ProviderError("stub: prompt has no sample count");
  const std::size_t count = std::stoul(m[1].str());
  const bool enriched = prompt.find("expand the vocabulary beyond") != std::string::npos;

  const StubIntent* intent = nullptr;
  const std::string wanted_slug = slugify(category);
  for (const auto& si : config_.intents) {
    if (si.name == category || slugify(si.name) == wanted_slug) intent = &si;
  }
  if (intent == nullptr) throw ProviderError("stub: no keyword pool for category '" + category + "'");
  const auto& pool = (enriched && !intent->enriched_keywords.empty()) ? intent->enriched_keywords
                                                                      : intent->keywords;

  Rng rng(config_.seed, prompt_stream(prompt));
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t length =
        config_.min_words + rng.below(config_.max_words - config_.min_words + 1);
    std::size_t keywords = config_.min_keywords + rng.below(config_.max_keywords - config_.min_keywords + 1);
    keywords = std::min(keywords, pool.size());

    std::vector<std::string> picks(pool);
    shuffle(picks, rng);
    picks.resize(keywords);
    std::vector<std::string> fill(config_.filler);
    shuffle(fill, rng);
    for (std::size_t k = 0; picks.size() < length; ++k) picks.push_back(fill[k % fill.size()]);
    shuffle(picks, rng);

    std::string sentence;
    for (const auto& w : picks) {
      if (!sentence.empty()) sentence.push_back(' ');
      sentence += w;
    }
    sentence[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sentence[0])));
    sentence.push_back('.');

    if (config_.noise_rate > 0.0 && rng.chance(config_.noise_rate)) {
      sentence = rng.below(2) == 0 ? "- " + sentence : "Too short to count here.";
    }
    out += sentence;
    out.push_back('\n');
  }
  return out;
}

std::string prompt_key(const std::string& prompt) { return sha256_hex(prompt, 24); }

ReplayProvider::ReplayProvider(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ProviderError("replay directory " + dir_.string() + " does not exist");
  }
}

std::string ReplayProvider::complete(const std::string& prompt, const SamplingParams&) {
  const auto path = dir_ / (prompt_key(prompt) + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProviderError("replay: no recorded response " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RecordingProvider::RecordingProvider(Provider& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::string RecordingProvider::complete(const std::string& prompt, const SamplingParams& params) {
  std::string response = inner_.complete(prompt, params);
  std::ofstream out(dir_ / (prompt_key(prompt) + ".txt"), std::ios::binary | std::ios::trunc);
  out << response;
  return response;
}

HttpProvider::HttpProvider(std::string endpoint, std::string api_key, std::string model)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), model_(std::move(model)) {
  if (endpoint_.empty()) throw ProviderError("http provider: empty endpoint");
  if (model_.empty()) throw ProviderError("http provider: empty model name");
}

HttpProvider HttpProvider::from_env() {
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v == nullptr ? std::string() : std::string(v);
  };
  const std::string endpoint = get("TMBOOT_LLM_ENDPOINT");
  if (endpoint.empty()) throw ProviderError("http provider: TMBOOT_LLM_ENDPOINT is not set");
  return HttpProvider(endpoint, get("TMBOOT_LLM_API_KEY"), get("TMBOOT_LLM_MODEL"));
}

std::string HttpProvider::identity_hash() const { return sha256_hex(endpoint_ + "\n" + model_); }

std::string HttpProvider::complete(const std::string& prompt, const SamplingParams& params) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint_, m, url_re)) {
    throw ProviderError("http provider: malformed endpoint URL");
  }
  const std::string base = m[1].str();
  const std::string path = m[2].matched ? m[2].str() : "/v1/chat/completions";

  nlohmann::json body{{"model", model_},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                      {"temperature", params.temperature},
                      {"top_p", params.nucleus_p}};
  httplib::Client client(base);
  client.set_connection_timeout(30, 0);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
    headers.emplace("api-key", api_key_);
  }
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw ProviderError("http provider: request failed (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200) {
    throw ProviderError("http provider: status " + std::to_string(res->status));
  }
  try {
    const auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("http provider: unexpected response (") + e.what() + ")");
  }
}

}  // namespace tmboot
