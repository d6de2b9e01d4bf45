#include "tmboot/bootstrap.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "json.hpp"

#include "tmboot/hash.hpp"

namespace tmboot {

namespace fs = std::filesystem;

namespace {

constexpr Stage kGenerationStages[] = {Stage::kSeed, Stage::kCore, Stage::kEnriched};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::kDiscovery: return "discovery";
    case Stage::kSeed: return "seed";
    case Stage::kCore: return "core";
    case Stage::kEnriched: return "enriched";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kDiscovery, Stage::kSeed, Stage::kCore, Stage::kEnriched}) {
    if (stage_name(s) == name) return s;
  }
  throw std::invalid_argument("unknown stage '" + std::string(name) + "'");
}

PromptTemplate PromptTemplate::builtin(Stage stage) {
  return PromptTemplate{stage, std::string(builtin_prompt_body(stage))};
}

PromptTemplate PromptTemplate::load(const fs::path& dir, Stage stage) {
  const fs::path path = dir / (std::string(stage_name(stage)) + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot read prompt template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return PromptTemplate{stage, ss.str()};
}

std::vector<std::string> PromptTemplate::placeholders() const {
  static const std::regex re(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
  std::vector<std::string> names;
  for (auto it = std::sregex_iterator(body.begin(), body.end(), re); it != std::sregex_iterator(); ++it) {
    std::string name = (*it)[1].str();
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
  }
  return names;
}

std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
  // Single left-to-right pass so substituted values are never re-scanned.
  std::string out;
  out.reserve(tmpl.body.size());
  const std::string& b = tmpl.body;
  std::size_t i = 0;
  while (i < b.size()) {
    if (b[i] == '{') {
      std::size_t j = i + 1;
      while (j < b.size() && (std::isalnum(static_cast<unsigned char>(b[j])) || b[j] == '_')) ++j;
      if (j < b.size() && b[j] == '}' && j > i + 1 &&
          !std::isdigit(static_cast<unsigned char>(b[i + 1]))) {
        const std::string_view name(b.data() + i + 1, j - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) {
          throw PromptError("unbound placeholder {" + std::string(name) + "} in " +
                            std::string(stage_name(tmpl.stage)) + " template");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(b[i++]);
  }
  return out;
}

std::string format_examples(const std::vector<std::string>& examples) {
  std::string out;
  for (const auto& e : examples) {
    if (!out.empty()) out.push_back('\n');
    out += "- " + e;
  }
  return out;
}

ParsedSubIntents parse_sub_intents(std::string_view response) {
  static const std::regex line_re(R"(^([^\s:]+?)_due_to:[ \t]*(\S.*)$)");
  ParsedSubIntents result;
  std::set<std::string> seen;
  const auto lines = split_lines(response);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = trim(lines[i]);
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) {
      result.rejected.push_back({i + 1, line, "does not match <label>_due_to: <explanation>"});
      continue;
    }
    SubIntent si;
    try {
      si = make_sub_intent(line);
    } catch (const std::invalid_argument& e) {
      result.rejected.push_back({i + 1, line, e.what()});
      continue;
    }
    if (!seen.insert(lower(line)).second) {
      ++result.duplicates;
      continue;
    }
    result.subintents.push_back(std::move(si));
  }
  if (result.subintents.empty()) {
    std::string msg = "no valid sub-intent lines in response";
    if (!result.rejected.empty()) {
      msg += " (" + std::to_string(result.rejected.size()) + " rejected, first at line " +
             std::to_string(result.rejected.front().line) + ")";
    }
    throw SubIntentParseError(msg);
  }
  return result;
}

void GenerationConfig::validate() const {
  if (seed_count == 0 || core_count == 0 || enriched_count == 0) {
    throw std::invalid_argument("generation: stage counts must be >= 1");
  }
  if (!(nucleus_p > 0.0 && nucleus_p <= 1.0)) throw std::invalid_argument("generation: nucleus_p must be in (0, 1]");
  if (!(temperature >= 0.0)) throw std::invalid_argument("generation: temperature must be >= 0");
  if (provider.empty()) throw std::invalid_argument("generation: provider id is empty");
}

std::size_t GenerationConfig::count(Stage stage) const {
  switch (stage) {
    case Stage::kSeed: return seed_count;
    case Stage::kCore: return core_count;
    case Stage::kEnriched: return enriched_count;
    case Stage::kDiscovery: break;
  }
  throw std::invalid_argument("discovery stage has no sample count");
}

std::string GenerationConfig::hash() const {
  nlohmann::ordered_json j;
  j["seed_count"] = seed_count;
  j["core_count"] = core_count;
  j["enriched_count"] = enriched_count;
  j["nucleus_p"] = nucleus_p;
  j["temperature"] = temperature;
  j["provider"] = provider;
  j["anchor_count"] = anchor_count;
  j["retry_budget"] = retry_budget;
  return sha256_hex(j.dump());
}

SampleCheck validate_sample(std::string_view text, Stage) {
  if (text.find('\n') != std::string_view::npos || text.find('\r') != std::string_view::npos) {
    return {false, "not a single line"};
  }
  const std::string t = trim(text);
  if (t.empty()) return {false, "empty"};

  static const std::regex list_marker(R"(^([-*+]|\d+[.)]|[A-Za-z][.)])\s)");
  if (std::regex_search(t, list_marker) || t.rfind("\xE2\x80\xA2", 0) == 0) {
    return {false, "formatting noise: list marker"};
  }

  std::istringstream ss(t);
  std::vector<std::string> words;
  for (std::string w; ss >> w;) words.push_back(w);
  if (words.front().size() > 1 && words.front().back() == ':') {
    return {false, "formatting noise: label prefix"};
  }
  if (words.size() < kMinSampleWords) {
    return {false, "too short: " + std::to_string(words.size()) + " words"};
  }
  return {true, {}};
}

std::vector<LabeledExample> generate_stage(const StageRequest& request, const GenerationConfig& config,
                                           Provider& provider, const PromptTemplate* tmpl,
                                           std::vector<std::string>* prompts) {
  if (request.stage == Stage::kDiscovery) throw std::invalid_argument("generate_stage: discovery is not a generation stage");
  config.validate();
  const PromptTemplate builtin = PromptTemplate::builtin(request.stage);
  if (tmpl == nullptr) tmpl = &builtin;

  std::vector<std::string> anchors(request.anchors.begin(),
                                   request.anchors.begin() +
                                       static_cast<std::ptrdiff_t>(std::min(config.anchor_count, request.anchors.size())));
  const std::size_t wanted = config.count(request.stage);
  std::vector<LabeledExample> out;
  for (std::size_t attempt = 0; out.size() < wanted && attempt <= config.retry_budget; ++attempt) {
    Bindings b{{"CATEGORY_LABEL", request.subintent.name},
               {"N", std::to_string(wanted - out.size())},
               {"EXAMPLES", format_examples(anchors)}};
    const std::string prompt = render_prompt(*tmpl, b);
    if (prompts) prompts->push_back(prompt);
    std::string response;
    try {
      response = provider.complete(prompt, config.sampling());
    } catch (const ProviderError& e) {
      throw GenerationError(std::string("provider failure: ") + e.what(), request.stage, std::move(out));
    }
    for (const auto& raw : split_lines(response)) {
      if (out.size() >= wanted) break;
      const std::string line = trim(raw);
      if (!validate_sample(line, request.stage)) continue;
      out.push_back({line, request.subintent.parent_label, request.subintent.slug});
    }
  }
  if (out.size() < wanted) {
    throw GenerationError(std::string(stage_name(request.stage)) + " stage for " + request.subintent.slug +
                              ": collected " + std::to_string(out.size()) + " of " + std::to_string(wanted) +
                              " samples after " + std::to_string(config.retry_budget) + " retries",
                          request.stage, std::move(out));
  }
  return out;
}

const std::vector<LabeledExample>& SubIntentSamples::stage(Stage s) const {
  switch (s) {
    case Stage::kSeed: return seed;
    case Stage::kCore: return core;
    case Stage::kEnriched: return enriched;
    case Stage::kDiscovery: break;
  }
  throw std::invalid_argument("discovery stage has no samples");
}

std::vector<SubIntent> SyntheticCorpus::subintents() const {
  std::vector<SubIntent> out;
  for (const auto& e : entries) out.push_back(e.subintent);
  return out;
}

std::vector<LabeledExample> SyntheticCorpus::all_examples() const {
  std::vector<LabeledExample> out;
  for (const auto& e : entries) {
    for (Stage s : kGenerationStages) {
      const auto& v = e.stage(s);
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

std::string current_timestamp() {
  std::time_t t;
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde != nullptr && *sde != '\0') {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  } else {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::vector<std::string> texts(const std::vector<LabeledExample>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(e.text);
  return out;
}

PromptTemplate template_for(const fs::path& dir, Stage stage) {
  return dir.empty() ? PromptTemplate::builtin(stage) : PromptTemplate::load(dir, stage);
}

}  // namespace

SyntheticCorpus generate_corpus(const std::vector<SubIntent>& subintents,
                                const std::map<std::string, std::vector<std::string>>& real_examples,
                                const GenerationConfig& config, Provider& provider, const fs::path& prompt_dir) {
  config.validate();
  const PromptTemplate seed_t = template_for(prompt_dir, Stage::kSeed);
  const PromptTemplate core_t = template_for(prompt_dir, Stage::kCore);
  const PromptTemplate enr_t = template_for(prompt_dir, Stage::kEnriched);

  SyntheticCorpus corpus;
  std::set<std::string> slugs;
  for (const auto& si : subintents) {
    if (!slugs.insert(si.slug).second) throw std::invalid_argument("duplicate sub-intent slug " + si.slug);
    SubIntentSamples e{si, {}, {}, {}};
    std::vector<std::string> real;
    if (auto it = real_examples.find(si.parent_label); it != real_examples.end()) real = it->second;
    e.seed = generate_stage({Stage::kSeed, si, real}, config, provider, &seed_t);
    e.core = generate_stage({Stage::kCore, si, texts(e.seed)}, config, provider, &core_t);
    e.enriched = generate_stage({Stage::kEnriched, si, texts(e.core)}, config, provider, &enr_t);
    corpus.entries.push_back(std::move(e));
  }
  corpus.provenance = {provider.id(), config.hash(), current_timestamp()};
  return corpus;
}

ParsedSubIntents discover_sub_intents(const Bindings& bindings, Provider& provider, const GenerationConfig& config,
                                      std::size_t max_per_class, const fs::path& prompt_dir) {
  const PromptTemplate t = template_for(prompt_dir, Stage::kDiscovery);
  const std::string prompt = render_prompt(t, bindings);
  ParsedSubIntents parsed = parse_sub_intents(provider.complete(prompt, config.sampling()));
  if (max_per_class > 0) {
    std::map<std::string, std::size_t> per_class;
    std::vector<SubIntent> kept;
    for (auto& si : parsed.subintents) {
      if (++per_class[si.parent_label] <= max_per_class) kept.push_back(std::move(si));
    }
    parsed.subintents = std::move(kept);
  }
  return parsed;
}

void save_corpus(const fs::path& dir, const SyntheticCorpus& corpus, const GenerationConfig& config) {
  fs::create_directories(dir);
  nlohmann::ordered_json m;
  m["format"] = "tmboot-corpus-v1";
  m["provider"] = corpus.provenance.provider_id;
  m["config_hash"] = corpus.provenance.config_hash;
  m["timestamp"] = corpus.provenance.timestamp;
  m["counts"] = {{"seed", config.seed_count}, {"core", config.core_count}, {"enriched", config.enriched_count}};
  m["subintents"] = nlohmann::ordered_json::array();
  for (const auto& e : corpus.entries) {
    for (Stage s : kGenerationStages) {
      const auto& v = e.stage(s);
      if (v.size() != config.count(s)) {
        throw std::invalid_argument("corpus: " + e.subintent.slug + " " + std::string(stage_name(s)) + " has " +
                                    std::to_string(v.size()) + " samples, config wants " +
                                    std::to_string(config.count(s)));
      }
      for (const auto& x : v) {
        if (auto c = validate_sample(x.text, s); !c) {
          throw std::invalid_argument("corpus: invalid sample in " + e.subintent.slug + ": " + c.reason);
        }
      }
      save_dataset(dir / e.subintent.slug / (std::string(stage_name(s)) + ".jsonl"), v);
    }
    m["subintents"].push_back({{"name", e.subintent.name}, {"slug", e.subintent.slug}});
  }
  std::ofstream out(dir / "manifest", std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "manifest").string());
  out << m.dump(2) << '\n';
}

SyntheticCorpus load_corpus(const fs::path& dir) {
  const fs::path mpath = dir / "manifest";
  std::ifstream in(mpath);
  if (!in) throw DatasetError("cannot read " + mpath.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(mpath.string() + ": " + e.what());
  }
  if (m.value("format", "") != "tmboot-corpus-v1") throw DatasetError(mpath.string() + ": not a corpus manifest");

  SyntheticCorpus corpus;
  corpus.provenance = {m.at("provider").get<std::string>(), m.at("config_hash").get<std::string>(),
                       m.value("timestamp", "")};
  const auto& counts = m.at("counts");
  for (const auto& s : m.at("subintents")) {
    SubIntentSamples e;
    e.subintent = make_sub_intent(s.at("name").get<std::string>());
    if (e.subintent.slug != s.at("slug").get<std::string>()) {
      throw DatasetError(mpath.string() + ": slug mismatch for " + e.subintent.name);
    }
    for (Stage st : kGenerationStages) {
      const std::string name(stage_name(st));
      const fs::path p = dir / e.subintent.slug / (name + ".jsonl");
      auto v = load_dataset(p);
      if (v.size() != counts.at(name).get<std::size_t>()) {
        throw DatasetError(p.string() + ": " + std::to_string(v.size()) + " samples, manifest says " +
                           std::to_string(counts.at(name).get<std::size_t>()));
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (auto c = validate_sample(v[i].text, st); !c) throw DatasetError(p.string() + ": " + c.reason, i + 1);
        if (v[i].sub_intent != e.subintent.slug) {
          throw DatasetError(p.string() + ": sample tagged with wrong sub-intent", i + 1);
        }
      }
      (st == Stage::kSeed ? e.seed : st == Stage::kCore ? e.core : e.enriched) = std::move(v);
    }
    corpus.entries.push_back(std::move(e));
  }
  return corpus;
}

void save_sub_intents(const fs::path& path, const std::vector<SubIntent>& subintents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& si : subintents) out << si.name << '\n';
}

std::vector<SubIntent> load_sub_intents(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  auto parsed = parse_sub_intents(ss.str());
  if (!parsed.rejected.empty()) {
    throw DatasetError(path.string() + ": " + parsed.rejected.front().reason, parsed.rejected.front().line);
  }
  return parsed.subintents;
}

}  // namespace tmboot
