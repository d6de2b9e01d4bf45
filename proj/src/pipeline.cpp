#include "tmboot/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "tmboot/hash.hpp"
#include "tmboot/serialize.hpp"

namespace tmboot {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Owns the wrapped provider, unlike RecordingProvider itself.
class OwningRecorder final : public Provider {
 public:
  OwningRecorder(std::unique_ptr<Provider> inner, fs::path dir)
      : inner_(std::move(inner)), rec_(*inner_, std::move(dir)) {}
  std::string id() const override { return rec_.id(); }
  std::string complete(const std::string& prompt, const SamplingParams& p) override { return rec_.complete(prompt, p); }

 private:
  std::unique_ptr<Provider> inner_;
  RecordingProvider rec_;
};

std::string hash_json(const ojson& j) { return sha256_hex(j.dump()); }

std::string file_hash(const fs::path& p) { return sha256_hex(read_file(p)); }

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

}  // namespace

std::unique_ptr<Provider> make_provider(const ProviderSettings& s) {
  std::unique_ptr<Provider> p;
  if (s.kind == "stub") {
    if (s.stub_config.empty()) throw ProviderError("stub provider needs a keyword-pool config");
    p = std::make_unique<StubProvider>(parse_stub_config(read_file(s.stub_config)));
  } else if (s.kind == "replay") {
    p = std::make_unique<ReplayProvider>(s.replay_dir);
  } else if (s.kind == "http") {
    p = std::make_unique<HttpProvider>(HttpProvider::from_env());
  } else {
    throw ProviderError("unknown provider '" + s.kind + "'");
  }
  if (!s.record_dir.empty()) p = std::make_unique<OwningRecorder>(std::move(p), s.record_dir);
  return p;
}

std::string provider_identity(const ProviderSettings& s) {
  if (s.kind == "stub") return "stub:" + file_hash(s.stub_config);
  if (s.kind == "replay") return "replay:" + sha256_hex(fs::absolute(s.replay_dir).lexically_normal().string());
  if (s.kind == "http") return "http:" + HttpProvider::from_env().identity_hash();
  throw ProviderError("unknown provider '" + s.kind + "'");
}

// ---------------------------------------------------------------- config

PipelineConfig PipelineConfig::from_json(const std::string& text, const fs::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

  PipelineConfig c;
  try {
    auto path = [&](const nlohmann::json& o, const char* key, fs::path& out) {
      if (o.contains(key)) out = resolve(base_dir, o.at(key).get<std::string>());
    };
    const auto& d = j.value("data", nlohmann::json::object());
    path(d, "train", c.train);
    path(d, "test", c.test);
    path(d, "subintents", c.subintents);
    c.dataset_name = d.value("name", c.dataset_name);
    c.domain_description = d.value("domain", c.domain_description);
    c.max_subintents_per_class = d.value("max_subintents_per_class", c.max_subintents_per_class);

    const auto& p = j.value("provider", nlohmann::json::object());
    c.provider.kind = p.value("kind", c.provider.kind);
    path(p, "stub_config", c.provider.stub_config);
    path(p, "replay_dir", c.provider.replay_dir);
    path(p, "record_dir", c.provider.record_dir);

    const auto& g = j.value("generation", nlohmann::json::object());
    c.generation.seed_count = g.value("seed_count", c.generation.seed_count);
    c.generation.core_count = g.value("core_count", c.generation.core_count);
    c.generation.enriched_count = g.value("enriched_count", c.generation.enriched_count);
    c.generation.nucleus_p = g.value("nucleus_p", c.generation.nucleus_p);
    c.generation.temperature = g.value("temperature", c.generation.temperature);
    c.generation.anchor_count = g.value("anchors", c.generation.anchor_count);
    c.generation.retry_budget = g.value("retries", c.generation.retry_budget);
    path(g, "prompt_dir", c.prompt_dir);
    c.generation.provider = c.provider.kind;

    const auto& v = j.value("vocab", nlohmann::json::object());
    c.vocab.min_doc_freq = v.value("min_doc_freq", c.vocab.min_doc_freq);
    c.vocab.max_size = v.value("max_size", c.vocab.max_size);
    c.vocab.remove_stopwords = v.value("remove_stopwords", c.vocab.remove_stopwords);

    const auto& n = j.value("ntm", nlohmann::json::object());
    c.ntm.clauses_per_subintent = n.value("clauses", c.ntm.clauses_per_subintent);
    c.ntm.threshold = n.value("threshold", c.ntm.threshold);
    c.ntm.specificity = n.value("specificity", c.ntm.specificity);
    c.ntm.states_per_action = n.value("states", c.ntm.states_per_action);
    c.ntm_epochs = n.value("epochs", c.ntm_epochs);
    c.delta = n.value("delta", c.delta);

    const auto& t = j.value("tm", nlohmann::json::object());
    c.tm.clauses_per_class = t.value("clauses", c.tm.clauses_per_class);
    c.tm.threshold = t.value("threshold", c.tm.threshold);
    c.tm.specificity = t.value("specificity", c.tm.specificity);
    c.tm.states_per_action = t.value("states", c.tm.states_per_action);
    c.tm.weighted = t.value("weighted", c.tm.weighted);
    c.tm_epochs = t.value("epochs", c.tm_epochs);

    const auto& e = j.value("enrichment", nlohmann::json::object());
    c.enrich = e.value("enabled", c.enrich);
    c.presence = parse_presence_rule(e.value("rule", std::string(presence_rule_name(c.presence))));

    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: cannot read " + path.string());
  }
  return from_json(text, path.parent_path());
}

std::string PipelineConfig::to_json() const {
  ojson j;
  j["data"] = {{"train", train.string()},
               {"test", test.string()},
               {"subintents", subintents.string()},
               {"name", dataset_name},
               {"domain", domain_description},
               {"max_subintents_per_class", max_subintents_per_class}};
  j["provider"] = {{"kind", provider.kind},
                   {"stub_config", provider.stub_config.string()},
                   {"replay_dir", provider.replay_dir.string()},
                   {"record_dir", provider.record_dir.string()}};
  j["generation"] = {{"seed_count", generation.seed_count},     {"core_count", generation.core_count},
                     {"enriched_count", generation.enriched_count}, {"nucleus_p", generation.nucleus_p},
                     {"temperature", generation.temperature},   {"anchors", generation.anchor_count},
                     {"retries", generation.retry_budget},      {"prompt_dir", prompt_dir.string()}};
  j["vocab"] = {{"min_doc_freq", vocab.min_doc_freq},
                {"max_size", vocab.max_size},
                {"remove_stopwords", vocab.remove_stopwords}};
  j["ntm"] = {{"clauses", ntm.clauses_per_subintent}, {"threshold", ntm.threshold},
              {"specificity", ntm.specificity},       {"states", ntm.states_per_action},
              {"epochs", ntm_epochs},                 {"delta", delta}};
  j["tm"] = {{"clauses", tm.clauses_per_class}, {"threshold", tm.threshold},
             {"specificity", tm.specificity},   {"states", tm.states_per_action},
             {"weighted", tm.weighted},         {"epochs", tm_epochs}};
  j["enrichment"] = {{"enabled", enrich}, {"rule", std::string(presence_rule_name(presence))}};
  j["seeds"] = seeds;
  j["output_dir"] = output_dir.string();
  return j.dump(2);
}

void PipelineConfig::validate() const {
  auto need_file = [](const fs::path& p, const char* what) {
    if (p.empty()) throw std::invalid_argument(std::string("config: ") + what + " path is not set");
    if (!fs::is_regular_file(p)) throw std::invalid_argument(std::string("config: ") + what + " " + p.string() + " does not exist");
  };
  need_file(train, "train dataset");
  need_file(test, "test dataset");
  if (!subintents.empty()) need_file(subintents, "sub-intent list");
  if (provider.kind == "stub") {
    need_file(provider.stub_config, "stub config");
  } else if (provider.kind == "replay") {
    if (!fs::is_directory(provider.replay_dir)) {
      throw std::invalid_argument("config: replay directory " + provider.replay_dir.string() + " does not exist");
    }
  } else if (provider.kind != "http") {
    throw std::invalid_argument("config: unknown provider '" + provider.kind + "'");
  }
  if (!prompt_dir.empty() && !fs::is_directory(prompt_dir)) {
    throw std::invalid_argument("config: prompt directory " + prompt_dir.string() + " does not exist");
  }
  if (output_dir.empty()) throw std::invalid_argument("config: output_dir is not set");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be listed explicitly");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("config: duplicate seeds");
  }
  generation.validate();
  if (ntm.clauses_per_subintent == 0 || ntm.threshold <= 0 || ntm.specificity < 1.0 || ntm.states_per_action < 1) {
    throw std::invalid_argument("config: invalid NTM parameters");
  }
  if (ntm_epochs == 0 || tm_epochs == 0) throw std::invalid_argument("config: epochs must be >= 1");
  if (delta < 0) throw std::invalid_argument("config: delta must be >= 0");
  TMHyperParams probe = tm;
  probe.num_classes = std::max<std::size_t>(probe.num_classes, 1);
  probe.validate();
  if (vocab.min_doc_freq == 0 || vocab.max_size == 0) throw std::invalid_argument("config: invalid vocabulary parameters");
}

// ---------------------------------------------------------------- features

FeatureSpace::FeatureSpace(Vocabulary base) : base_(std::move(base)), names_(base_) {}

FeatureSpace::FeatureSpace(std::shared_ptr<const NTMModel> ntm, EnrichedVocabulary ev)
    : base_(ev.base()), ntm_(std::move(ntm)), ev_(std::move(ev)), names_(ev_.as_vocabulary()) {}

BowVector FeatureSpace::encode(std::string_view text) const {
  if (!ntm_) return binarize(text, base_);
  return enrich_example(text, *ntm_, ev_);
}

// ---------------------------------------------------------------- evaluation

EvalReport evaluate(const TMModel& model, const std::vector<BowVector>& xs, const std::vector<std::string>& labels) {
  if (xs.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (xs.size() != labels.size()) throw std::invalid_argument("evaluate: inputs and labels differ in length");
  EvalReport r;
  r.class_names = model.class_names();
  const std::size_t k = r.class_names.size();
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != model.num_features()) throw std::invalid_argument("evaluate: input width does not match the model");
    std::size_t truth;
    try {
      truth = model.class_index(labels[i]);
    } catch (const std::exception&) {
      throw std::invalid_argument("evaluate: test label '" + labels[i] + "' is unknown to the model");
    }
    ++r.confusion[truth][predict(model, xs[i])];
  }
  r.total = xs.size();
  std::size_t tp = 0, fp = 0, fn = 0;
  r.precision.assign(k, 0.0);
  r.recall.assign(k, 0.0);
  r.support.assign(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < k; ++t) predicted += r.confusion[t][c];
    r.support[c] = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    const std::size_t hit = r.confusion[c][c];
    if (predicted > 0) r.precision[c] = static_cast<double>(hit) / static_cast<double>(predicted);
    if (r.support[c] > 0) r.recall[c] = static_cast<double>(hit) / static_cast<double>(r.support[c]);
    tp += hit;
    fp += predicted - hit;
    fn += r.support[c] - hit;
  }
  r.accuracy = static_cast<double>(tp) / static_cast<double>(r.total);
  r.micro_f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  r.metadata["config_hash"] = model.config_hash();
  r.metadata["vocab_hash"] = model.vocab_hash();
  return r;
}

EvalReport evaluate(const TMModel& model, const std::vector<LabeledExample>& test, const FeatureSpace& space) {
  if (space.names().hash() != model.vocab_hash()) {
    throw std::invalid_argument("evaluate: model is bound to vocabulary " + model.vocab_hash() + ", features are " +
                                space.names().hash());
  }
  std::vector<BowVector> xs;
  std::vector<std::string> labels;
  for (const auto& ex : test) {
    xs.push_back(space.encode(ex.text));
    labels.push_back(ex.label);
  }
  return evaluate(model, xs, labels);
}

std::string EvalReport::to_json() const {
  ojson j;
  j["accuracy"] = accuracy;
  j["micro_f1"] = micro_f1;
  j["total"] = total;
  j["classes"] = ojson::array();
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    j["classes"].push_back({{"label", class_names[c]},
                            {"precision", precision[c]},
                            {"recall", recall[c]},
                            {"support", support[c]}});
  }
  j["confusion"] = confusion;
  j["metadata"] = ojson(metadata);
  return j.dump(2);
}

// ---------------------------------------------------------------- explain

Explanation explain(const TMModel& model, const BowVector& x, const Vocabulary& names) {
  if (names.size() != model.num_features()) throw std::invalid_argument("explain: feature names do not match the model");
  Explanation e;
  e.scores = class_scores(model, x, EvalMode::kInference);
  e.predicted = predict(model, x);
  e.predicted_label = model.class_names()[e.predicted];
  const auto& bank = model.bank(e.predicted);
  for (std::size_t j = 0; j < bank.size(); ++j) {
    const Clause& c = bank[j];
    if (!evaluate_clause(c, x, EvalMode::kInference)) continue;
    ExplainedClause ec;
    ec.index = j;
    ec.polarity = c.polarity;
    ec.weight = model.params().weighted ? c.weight : 1;
    for (std::size_t k : c.include.include_mask().ones()) ec.literals.push_back({k, false, names.token(k)});
    for (std::size_t k : c.negate.include_mask().ones()) ec.literals.push_back({k, true, names.token(k)});
    std::sort(ec.literals.begin(), ec.literals.end(),
              [](const auto& a, const auto& b) { return std::tie(a.feature, a.negated) < std::tie(b.feature, b.negated); });
    for (const auto& lit : ec.literals) {
      if (!ec.text.empty()) ec.text += " ∧ ";
      if (lit.negated) ec.text += "¬";
      ec.text += lit.name;
    }
    e.clauses.push_back(std::move(ec));
  }
  return e;
}

std::string Explanation::to_json() const {
  ojson j;
  j["predicted"] = predicted_label;
  j["scores"] = scores;
  j["clauses"] = ojson::array();
  for (const auto& c : clauses) {
    ojson lits = ojson::array();
    for (const auto& l : c.literals) lits.push_back({{"feature", l.name}, {"negated", l.negated}});
    j["clauses"].push_back(
        {{"index", c.index}, {"polarity", c.polarity}, {"weight", c.weight}, {"literals", lits}, {"text", c.text}});
  }
  return j.dump(2);
}

// ---------------------------------------------------------------- run

std::string RunSummary::to_json() const {
  ojson j;
  j["runs"] = ojson::array();
  for (const auto& r : runs) {
    j["runs"].push_back({{"seed", r.seed}, {"accuracy", r.report.accuracy}, {"micro_f1", r.report.micro_f1}});
  }
  j["accuracy"] = {{"mean", accuracy_mean}, {"std", accuracy_std}};
  j["micro_f1"] = {{"mean", micro_f1_mean}, {"std", micro_f1_std}};
  return j.dump(2);
}

namespace {

class Stamps {
 public:
  explicit Stamps(fs::path dir) : path_(std::move(dir) / "stages.json") {
    if (fs::exists(path_)) data_ = nlohmann::json::parse(read_file(path_));
  }
  std::optional<std::string> get(const std::string& stage) const {
    if (!data_.contains(stage)) return std::nullopt;
    return data_.at(stage).get<std::string>();
  }
  void set(const std::string& stage, const std::string& hash) {
    data_[stage] = hash;
    write_file(path_, data_.dump(2) + "\n");
  }

 private:
  fs::path path_;
  nlohmann::json data_ = nlohmann::json::object();
};

struct Runner {
  const PipelineConfig& cfg;
  const RunOptions& opt;
  RunSummary& summary;

  void log(const std::string& stage, const std::string& msg) const {
    if (opt.log) *opt.log << "[" << stage << "] " << msg << '\n';
  }

  // True when the stage can be reused from disk.
  bool reusable(Stamps& stamps, const std::string& stage, const std::string& hash,
                const std::vector<fs::path>& files, const std::string& tag) {
    bool all = true, any = false;
    for (const auto& f : files) {
      const bool e = fs::exists(f);
      all = all && e;
      any = any || e;
    }
    const auto rec = stamps.get(stage);
    if (all && rec && *rec == hash) {
      log(stage, "up to date, reusing " + files.front().parent_path().string());
      summary.skipped.push_back(tag);
      return true;
    }
    if (any && rec && *rec != hash && !opt.force) {
      throw StageError(stage, "artifacts in " + files.front().parent_path().string() + " were built with config " +
                                  *rec + " but the current config hashes to " + hash + "; pass --force to rebuild");
    }
    return false;
  }

  template <typename F>
  auto guarded(const std::string& stage, F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, e.what());
    }
  }
};

void expect_embedded(const std::string& stage, const fs::path& file, const std::string& found, const std::string& want) {
  if (found != want) {
    throw StageError(stage, file.string() + " embeds config hash " + (found.empty() ? "(none)" : found) +
                                ", expected " + want);
  }
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& cfg, const RunOptions& opt) {
  RunSummary summary;
  Runner run{cfg, opt, summary};
  run.guarded("config", [&] { cfg.validate(); });

  const fs::path out = cfg.output_dir;
  fs::create_directories(out);
  Stamps top(out);

  const auto train = run.guarded("load", [&] { return load_dataset(cfg.train); });
  const auto test = run.guarded("load", [&] { return load_dataset(cfg.test); });
  if (train.empty()) throw StageError("load", cfg.train.string() + " has no records");
  if (test.empty()) throw StageError("load", cfg.test.string() + " has no records");
  const std::vector<std::string> labels = collect_labels(train);

  std::unique_ptr<Provider> provider;
  auto get_provider = [&]() -> Provider& {
    if (!provider) provider = make_provider(cfg.provider);
    return *provider;
  };
  const std::string provider_id = run.guarded("provider", [&] { return provider_identity(cfg.provider); });
  const std::string prompts_id =
      cfg.prompt_dir.empty() ? std::string("builtin")
                             : sha256_hex(read_file(cfg.prompt_dir / "discovery.txt") + read_file(cfg.prompt_dir / "seed.txt") +
                                          read_file(cfg.prompt_dir / "core.txt") + read_file(cfg.prompt_dir / "enriched.txt"));

  // ---- sub-intents
  std::string labels_joined;
  for (const auto& l : labels) labels_joined += (labels_joined.empty() ? "" : ", ") + l;
  const std::string h_sub =
      cfg.subintents.empty()
          ? hash_json({{"discover", provider_id}, {"prompts", prompts_id}, {"name", cfg.dataset_name},
                       {"domain", cfg.domain_description}, {"labels", labels_joined},
                       {"cap", cfg.max_subintents_per_class}})
          : hash_json({{"file", file_hash(cfg.subintents)}});
  const fs::path sub_path = out / "subintents.txt";
  std::vector<SubIntent> subintents;
  if (run.reusable(top, "discover", h_sub, {sub_path}, "discover")) {
    subintents = run.guarded("discover", [&] { return load_sub_intents(sub_path); });
  } else {
    subintents = run.guarded("discover", [&] {
      if (!cfg.subintents.empty()) return load_sub_intents(cfg.subintents);
      Bindings b{{"DATASET_NAME", cfg.dataset_name},
                 {"DOMAIN_DESCRIPTION", cfg.domain_description},
                 {"CLASS_LABELS", labels_joined}};
      auto parsed = discover_sub_intents(b, get_provider(), cfg.generation, cfg.max_subintents_per_class, cfg.prompt_dir);
      for (const auto& r : parsed.rejected) run.log("discover", "rejected line " + std::to_string(r.line) + ": " + r.reason);
      return parsed.subintents;
    });
    for (const auto& si : subintents) {
      if (std::find(labels.begin(), labels.end(), si.parent_label) == labels.end()) {
        throw StageError("discover", "sub-intent '" + si.name + "' names unknown class '" + si.parent_label + "'");
      }
    }
    save_sub_intents(sub_path, subintents);
    top.set("discover", h_sub);
    run.log("discover", std::to_string(subintents.size()) + " sub-intents");
  }

  // ---- synthetic corpus
  const std::string h_gen = hash_json({{"sub", h_sub}, {"gen", cfg.generation.hash()}, {"provider", provider_id},
                                       {"prompts", prompts_id}, {"train", file_hash(cfg.train)}});
  const fs::path corpus_dir = out / "corpus";
  SyntheticCorpus corpus;
  if (run.reusable(top, "generate", h_gen, {corpus_dir / "manifest"}, "generate")) {
    corpus = run.guarded("generate", [&] { return load_corpus(corpus_dir); });
  } else {
    corpus = run.guarded("generate", [&] {
      std::map<std::string, std::vector<std::string>> real;
      for (const auto& ex : train) real[ex.label].push_back(ex.text);
      auto c = generate_corpus(subintents, real, cfg.generation, get_provider(), cfg.prompt_dir);
      c.provenance.config_hash = h_gen;
      fs::remove_all(corpus_dir);
      save_corpus(corpus_dir, c, cfg.generation);
      return c;
    });
    top.set("generate", h_gen);
    run.log("generate", std::to_string(corpus.all_examples().size()) + " samples");
  }
  expect_embedded("generate", corpus_dir / "manifest", corpus.provenance.config_hash, h_gen);
  const auto synthetic = corpus.all_examples();

  // ---- vocabulary
  const std::string h_vocab = hash_json({{"gen", h_gen},
                                         {"min_df", cfg.vocab.min_doc_freq},
                                         {"max", cfg.vocab.max_size},
                                         {"stop", cfg.vocab.remove_stopwords}});
  const fs::path vocab_path = out / "vocab.txt";
  Vocabulary vocab;
  if (run.reusable(top, "build-vocab", h_vocab, {vocab_path}, "build-vocab")) {
    std::string embedded;
    vocab = run.guarded("build-vocab", [&] { return load_vocabulary(vocab_path, &embedded); });
    expect_embedded("build-vocab", vocab_path, embedded, h_vocab);
  } else {
    vocab = run.guarded("build-vocab", [&] {
      std::vector<LabeledExample> all = train;
      all.insert(all.end(), synthetic.begin(), synthetic.end());
      return build_vocabulary(all, cfg.vocab);
    });
    save_vocabulary(vocab_path, vocab, h_vocab);
    top.set("build-vocab", h_vocab);
    run.log("build-vocab", std::to_string(vocab.size()) + " tokens");
  }

  const std::string test_hash = file_hash(cfg.test);
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string tag = "@seed-" + std::to_string(seed);
    const fs::path dir = out / ("seed-" + std::to_string(seed));
    fs::create_directories(dir);
    Stamps stamps(dir);

    // ---- NTM
    const std::string h_ntm = hash_json({{"vocab", h_vocab},
                                         {"clauses", cfg.ntm.clauses_per_subintent},
                                         {"T", cfg.ntm.threshold},
                                         {"s", cfg.ntm.specificity},
                                         {"N", cfg.ntm.states_per_action},
                                         {"epochs", cfg.ntm_epochs},
                                         {"seed", seed}});
    const fs::path ntm_path = dir / "ntm.model";
    auto ntm = std::make_shared<NTMModel>();
    if (run.reusable(stamps, "train-ntm", h_ntm, {ntm_path}, "train-ntm" + tag)) {
      *ntm = run.guarded("train-ntm", [&] { return load_ntm_model(ntm_path); });
      expect_embedded("train-ntm", ntm_path, ntm->config_hash(), h_ntm);
    } else {
      run.guarded("train-ntm", [&] {
        NtmParams p = cfg.ntm;
        p.seed = seed;
        *ntm = NTMModel(p, vocab.size(), vocab.hash(), corpus.subintents());
        ntm->set_config_hash(h_ntm);
        const auto fr = train_ntm(*ntm, synthetic, vocab, cfg.ntm_epochs, seed);
        save_model(ntm_path, *ntm);
        run.log("train-ntm", "seed " + std::to_string(seed) + ": final synthetic accuracy " +
                                 std::to_string(fr.epoch_accuracy.back()));
      });
      stamps.set("train-ntm", h_ntm);
    }

    // ---- feature groups
    const std::string h_feat = hash_json({{"ntm", h_ntm}, {"delta", cfg.delta}});
    const fs::path feat_path = dir / "featgroups.txt";
    std::vector<FeatureGroup> groups;
    if (run.reusable(stamps, "extract-features", h_feat, {feat_path}, "extract-features" + tag)) {
      auto f = run.guarded("extract-features", [&] { return load_feature_groups(feat_path); });
      expect_embedded("extract-features", feat_path, f.config_hash, h_feat);
      groups = std::move(f.groups);
    } else {
      groups = run.guarded("extract-features", [&] {
        auto g = extract_feature_groups(*ntm, vocab, cfg.delta);
        save_feature_groups(feat_path, g, vocab.hash(), h_feat);
        return g;
      });
      stamps.set("extract-features", h_feat);
    }

    // ---- enrichment
    const std::string h_enrich = hash_json({{"feat", h_feat},
                                            {"enabled", cfg.enrich},
                                            {"rule", std::string(presence_rule_name(cfg.presence))},
                                            {"train", file_hash(cfg.train)},
                                            {"test", test_hash}});
    const fs::path ev_path = dir / "enriched-vocab.txt";
    const fs::path etrain_path = dir / "train.enriched.jsonl";
    const fs::path etest_path = dir / "test.enriched.jsonl";
    std::vector<BowVector> train_x, test_x;
    Vocabulary names;
    if (!cfg.enrich) {
      for (const auto& ex : train) train_x.push_back(binarize(ex.text, vocab));
      for (const auto& ex : test) test_x.push_back(binarize(ex.text, vocab));
      names = vocab;
    } else if (run.reusable(stamps, "enrich", h_enrich, {ev_path, etrain_path, etest_path}, "enrich" + tag)) {
      run.guarded("enrich", [&] {
        const auto ev = load_enriched_vocabulary(ev_path, vocab, *ntm);
        train_x = load_enriched_dataset(etrain_path, ev).vectors;
        test_x = load_enriched_dataset(etest_path, ev).vectors;
        names = ev.as_vocabulary();
      });
    } else {
      run.guarded("enrich", [&] {
        EnrichedVocabulary ev(vocab, *ntm, groups, vocab.hash(), cfg.presence);
        auto etrain = enrich_dataset(train, ev, *ntm);
        auto etest = enrich_dataset(test, ev, *ntm);
        save_enriched_vocabulary(ev_path, ev);
        save_enriched_dataset(etrain_path, etrain);
        save_enriched_dataset(etest_path, etest);
        run.log("enrich", "seed " + std::to_string(seed) + ": " + std::to_string(ev.injected().size()) +
                              " indicators, " + std::to_string(etrain.stats.samples_with_injection) + "/" +
                              std::to_string(etrain.stats.total) + " train samples activated");
        train_x = std::move(etrain.vectors);
        test_x = std::move(etest.vectors);
        names = ev.as_vocabulary();
      });
      stamps.set("enrich", h_enrich);
    }

    // ---- TM fine-tune
    const std::string h_tm = hash_json({{"enrich", h_enrich},
                                        {"clauses", cfg.tm.clauses_per_class},
                                        {"T", cfg.tm.threshold},
                                        {"s", cfg.tm.specificity},
                                        {"N", cfg.tm.states_per_action},
                                        {"weighted", cfg.tm.weighted},
                                        {"epochs", cfg.tm_epochs},
                                        {"seed", seed}});
    const fs::path tm_path = dir / "tm.model";
    TMModel tm;
    if (run.reusable(stamps, "train-tm", h_tm, {tm_path}, "train-tm" + tag)) {
      tm = run.guarded("train-tm", [&] { return load_tm_model(tm_path); });
      expect_embedded("train-tm", tm_path, tm.config_hash(), h_tm);
    } else {
      run.guarded("train-tm", [&] {
        TMHyperParams p = cfg.tm;
        p.num_classes = labels.size();
        p.seed = seed;
        tm = TMModel(p, names.size(), names.hash(), labels);
        tm.set_config_hash(h_tm);
        std::vector<std::size_t> y;
        for (const auto& ex : train) y.push_back(tm.class_index(ex.label));
        fit(tm, train_x, y, cfg.tm_epochs, seed);
        save_model(tm_path, tm);
      });
      stamps.set("train-tm", h_tm);
    }

    // ---- eval
    const fs::path eval_path = dir / "eval.json";
    EvalReport report = run.guarded("eval", [&] {
      std::vector<std::string> y;
      for (const auto& ex : test) y.push_back(ex.label);
      auto r = evaluate(tm, test_x, y);
      r.metadata["seed"] = std::to_string(seed);
      r.metadata["enriched"] = cfg.enrich ? "true" : "false";
      return r;
    });
    write_file(eval_path, report.to_json() + "\n");
    stamps.set("eval", h_tm);
    run.log("eval", "seed " + std::to_string(seed) + ": accuracy " + std::to_string(report.accuracy));
    summary.runs.push_back({seed, std::move(report), dir});
  }

  auto mean_std = [&](auto get, double& mean, double& sd) {
    const double n = static_cast<double>(summary.runs.size());
    mean = 0.0;
    for (const auto& r : summary.runs) mean += get(r) / n;
    double ss = 0.0;
    for (const auto& r : summary.runs) ss += (get(r) - mean) * (get(r) - mean);
    sd = summary.runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  };
  mean_std([](const SeedResult& r) { return r.report.accuracy; }, summary.accuracy_mean, summary.accuracy_std);
  mean_std([](const SeedResult& r) { return r.report.micro_f1; }, summary.micro_f1_mean, summary.micro_f1_std);
  write_file(out / "summary.json", summary.to_json() + "\n");
  return summary;
}

}  // namespace tmboot
