// tmboot: command-line front end for the bootstrapping pipeline.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "tmboot/bootstrap.hpp"
#include "tmboot/corpus.hpp"
#include "tmboot/enrichment.hpp"
#include "tmboot/ntm.hpp"
#include "tmboot/pipeline.hpp"
#include "tmboot/serialize.hpp"
#include "tmboot/tm.hpp"

namespace fs = std::filesystem;
using namespace tmboot;

namespace {

template <typename F>
void in_stage(const std::string& stage, F&& f) {
  try {
    f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

struct ProviderFlags {
  ProviderSettings settings;
  void add(CLI::App* cmd) {
    cmd->add_option("--provider", settings.kind, "stub | replay | http")
        ->check(CLI::IsMember({"stub", "replay", "http"}));
    cmd->add_option("--stub-config", settings.stub_config, "keyword pools for the stub provider (JSON)");
    cmd->add_option("--replay-dir", settings.replay_dir, "recorded responses for the replay provider");
    cmd->add_option("--record-dir", settings.record_dir, "record every prompt/response pair here");
  }
};

struct SpaceFlags {
  fs::path vocab, ntm, enriched_vocab;
  void add(CLI::App* cmd) {
    cmd->add_option("--vocab", vocab, "vocab-v1 file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--ntm", ntm, "NTM model (enriched inputs)")->check(CLI::ExistingFile);
    cmd->add_option("--enriched-vocab", enriched_vocab, "enriched-vocab-v1 sidecar (enriched inputs)")
        ->check(CLI::ExistingFile);
  }
  FeatureSpace load() const {
    Vocabulary v = load_vocabulary(vocab);
    if (ntm.empty() != enriched_vocab.empty()) {
      throw std::invalid_argument("--ntm and --enriched-vocab must be given together");
    }
    if (ntm.empty()) return FeatureSpace(std::move(v));
    auto model = std::make_shared<NTMModel>(load_ntm_model(ntm));
    auto ev = load_enriched_vocabulary(enriched_vocab, v, *model);
    return FeatureSpace(std::move(model), std::move(ev));
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, text + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tsetlin machine text classification bootstrapped from synthetic sub-intent data"};
  app.require_subcommand(1);

  // build-vocab
  std::vector<fs::path> bv_data;
  fs::path bv_corpus, bv_out;
  VocabularyParams bv_params;
  auto* bv = app.add_subcommand("build-vocab", "build a vocab-v1 file from datasets and/or a synthetic corpus");
  bv->add_option("--data", bv_data, "dataset (.jsonl), repeatable")->check(CLI::ExistingFile);
  bv->add_option("--corpus", bv_corpus, "synthetic corpus directory")->check(CLI::ExistingDirectory);
  bv->add_option("--min-df", bv_params.min_doc_freq, "minimum document frequency")->capture_default_str();
  bv->add_option("--max-size", bv_params.max_size, "maximum vocabulary size")->capture_default_str();
  bv->add_flag("--stopwords", bv_params.remove_stopwords, "drop English stop words");
  bv->add_option("--out", bv_out, "output file")->required();

  // discover
  std::string dc_name, dc_domain, dc_labels;
  fs::path dc_data, dc_out, dc_prompts;
  std::size_t dc_cap = 0;
  ProviderFlags dc_provider;
  auto* dc = app.add_subcommand("discover", "ask the provider for sub-intents of each class");
  dc->add_option("--dataset-name", dc_name)->required();
  dc->add_option("--domain", dc_domain, "domain description")->required();
  auto* dc_labels_opt = dc->add_option("--labels", dc_labels, "comma-separated class labels");
  dc->add_option("--data", dc_data, "take class labels from this dataset")->check(CLI::ExistingFile)->excludes(dc_labels_opt);
  dc->add_option("--max-per-class", dc_cap, "keep at most this many sub-intents per class (0: all)");
  dc->add_option("--prompt-dir", dc_prompts)->check(CLI::ExistingDirectory);
  dc->add_option("--out", dc_out, "sub-intent list")->required();
  dc_provider.add(dc);

  // generate
  fs::path gn_sub, gn_train, gn_out, gn_prompts;
  GenerationConfig gn_cfg;
  ProviderFlags gn_provider;
  auto* gn = app.add_subcommand("generate", "run the seed/core/enriched generation stages");
  gn->add_option("--subintents", gn_sub)->required()->check(CLI::ExistingFile);
  gn->add_option("--train", gn_train, "real examples used as seed-stage anchors")->check(CLI::ExistingFile);
  gn->add_option("--seed-count", gn_cfg.seed_count)->capture_default_str();
  gn->add_option("--core-count", gn_cfg.core_count)->capture_default_str();
  gn->add_option("--enriched-count", gn_cfg.enriched_count)->capture_default_str();
  gn->add_option("--anchors", gn_cfg.anchor_count, "examples embedded per prompt")->capture_default_str();
  gn->add_option("--retries", gn_cfg.retry_budget, "re-queries per stage")->capture_default_str();
  gn->add_option("--nucleus-p", gn_cfg.nucleus_p)->capture_default_str();
  gn->add_option("--temperature", gn_cfg.temperature)->capture_default_str();
  gn->add_option("--prompt-dir", gn_prompts)->check(CLI::ExistingDirectory);
  gn->add_option("--out", gn_out, "corpus directory")->required();
  gn_provider.add(gn);

  // train-ntm
  fs::path tn_corpus, tn_vocab, tn_out;
  NtmParams tn_params;
  std::size_t tn_epochs = 20;
  std::uint64_t tn_seed = 1;
  auto* tn = app.add_subcommand("train-ntm", "train the monotone sub-intent machine on a synthetic corpus");
  tn->add_option("--corpus", tn_corpus)->required()->check(CLI::ExistingDirectory);
  tn->add_option("--vocab", tn_vocab)->required()->check(CLI::ExistingFile);
  tn->add_option("--clauses", tn_params.clauses_per_subintent, "clauses per sub-intent")->capture_default_str();
  tn->add_option("--threshold", tn_params.threshold)->capture_default_str();
  tn->add_option("--specificity", tn_params.specificity)->capture_default_str();
  tn->add_option("--states", tn_params.states_per_action, "N, states per action")->capture_default_str();
  tn->add_option("--epochs", tn_epochs)->capture_default_str();
  tn->add_option("--seed", tn_seed)->required();
  tn->add_option("--out", tn_out)->required();

  // extract-features
  fs::path ef_model, ef_vocab, ef_out;
  int ef_delta = 5;
  auto* ef = app.add_subcommand("extract-features", "write featgroups-v1 from a trained NTM");
  ef->add_option("--model", ef_model)->required()->check(CLI::ExistingFile);
  ef->add_option("--vocab", ef_vocab)->required()->check(CLI::ExistingFile);
  ef->add_option("--delta", ef_delta, "confidence threshold")->capture_default_str();
  ef->add_option("--out", ef_out)->required();

  // enrich
  fs::path en_data, en_vocab, en_ntm, en_groups, en_out, en_sidecar;
  std::string en_rule = "attribution";
  auto* en = app.add_subcommand("enrich", "append NTM indicator features to a dataset");
  en->add_option("--data", en_data)->required()->check(CLI::ExistingFile);
  en->add_option("--vocab", en_vocab)->required()->check(CLI::ExistingFile);
  en->add_option("--ntm", en_ntm)->required()->check(CLI::ExistingFile);
  en->add_option("--groups", en_groups)->required()->check(CLI::ExistingFile);
  en->add_option("--rule", en_rule, "presence rule")->check(CLI::IsMember({"attribution", "lexical"}))->capture_default_str();
  en->add_option("--out", en_out, "enriched dataset")->required();
  en->add_option("--vocab-out", en_sidecar, "enriched-vocab-v1 sidecar")->required();

  // train-tm
  fs::path tt_data, tt_out;
  SpaceFlags tt_space;
  TMHyperParams tt_params;
  std::size_t tt_epochs = 20;
  auto* tt = app.add_subcommand("train-tm", "train the class-level machine (plain or enriched inputs)");
  tt->add_option("--data", tt_data, "dataset; enriched datasets also need --ntm and --enriched-vocab")
      ->required()->check(CLI::ExistingFile);
  tt_space.add(tt);
  tt->add_option("--clauses", tt_params.clauses_per_class, "clauses per class")->capture_default_str();
  tt->add_option("--threshold", tt_params.threshold)->capture_default_str();
  tt->add_option("--specificity", tt_params.specificity)->capture_default_str();
  tt->add_option("--states", tt_params.states_per_action)->capture_default_str();
  tt->add_flag("!--unweighted", tt_params.weighted, "disable clause weights");
  tt->add_option("--epochs", tt_epochs)->capture_default_str();
  tt->add_option("--seed", tt_params.seed)->required();
  tt->add_option("--out", tt_out)->required();

  // eval
  fs::path ev_model, ev_data, ev_out;
  SpaceFlags ev_space;
  auto* evc = app.add_subcommand("eval", "accuracy, micro-F1, per-class metrics and confusion matrix");
  evc->add_option("--model", ev_model)->required()->check(CLI::ExistingFile);
  evc->add_option("--data", ev_data, "test dataset (raw text; enrichment is recomputed)")->required()->check(CLI::ExistingFile);
  ev_space.add(evc);
  evc->add_option("--out", ev_out, "report file (default: stdout)");

  // explain
  fs::path ex_model, ex_data;
  std::string ex_text;
  std::size_t ex_index = 0;
  bool ex_json = false;
  SpaceFlags ex_space;
  auto* ex = app.add_subcommand("explain", "show the firing clauses behind a prediction");
  ex->add_option("--model", ex_model)->required()->check(CLI::ExistingFile);
  ex_space.add(ex);
  auto* ex_text_opt = ex->add_option("--text", ex_text, "input text");
  ex->add_option("--data", ex_data, "dataset to take the input from")->check(CLI::ExistingFile)->excludes(ex_text_opt);
  ex->add_option("--index", ex_index, "0-based record index in --data")->capture_default_str();
  ex->add_flag("--json", ex_json);

  // run
  fs::path rn_config, rn_out;
  std::vector<std::uint64_t> rn_seeds;
  bool rn_force = false, rn_quiet = false;
  auto* rn = app.add_subcommand("run", "full pipeline from a JSON config; resumable");
  rn->add_option("--config", rn_config)->required()->check(CLI::ExistingFile);
  rn->add_option("--seeds", rn_seeds, "override the configured seed list")->delimiter(',');
  rn->add_option("--out", rn_out, "override output_dir");
  rn->add_flag("--force", rn_force, "rebuild stages whose artifacts were built under another config");
  rn->add_flag("--quiet", rn_quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*bv) {
      in_stage("build-vocab", [&] {
        if (bv_data.empty() && bv_corpus.empty()) throw std::invalid_argument("give --data and/or --corpus");
        std::vector<LabeledExample> all;
        for (const auto& p : bv_data) {
          auto d = load_dataset(p);
          all.insert(all.end(), d.begin(), d.end());
        }
        if (!bv_corpus.empty()) {
          auto c = load_corpus(bv_corpus).all_examples();
          all.insert(all.end(), c.begin(), c.end());
        }
        const Vocabulary v = build_vocabulary(all, bv_params);
        save_vocabulary(bv_out, v);
        std::cerr << "build-vocab: " << v.size() << " tokens, hash " << v.hash() << '\n';
      });
    } else if (*dc) {
      in_stage("discover", [&] {
        std::string labels = dc_labels;
        if (!dc_data.empty()) {
          for (const auto& l : collect_labels(load_dataset(dc_data))) labels += (labels.empty() ? "" : ", ") + l;
        }
        if (labels.empty()) throw std::invalid_argument("give --labels or --data");
        GenerationConfig g;
        g.provider = dc_provider.settings.kind;
        auto provider = make_provider(dc_provider.settings);
        Bindings b{{"DATASET_NAME", dc_name}, {"DOMAIN_DESCRIPTION", dc_domain}, {"CLASS_LABELS", labels}};
        auto parsed = discover_sub_intents(b, *provider, g, dc_cap, dc_prompts);
        for (const auto& r : parsed.rejected) {
          std::cerr << "discover: rejected line " << r.line << " (" << r.reason << "): " << r.text << '\n';
        }
        save_sub_intents(dc_out, parsed.subintents);
        std::cerr << "discover: " << parsed.subintents.size() << " sub-intents, " << parsed.duplicates
                  << " duplicates dropped\n";
      });
    } else if (*gn) {
      in_stage("generate", [&] {
        gn_cfg.provider = gn_provider.settings.kind;
        const auto subs = load_sub_intents(gn_sub);
        std::map<std::string, std::vector<std::string>> real;
        if (!gn_train.empty()) {
          for (const auto& e : load_dataset(gn_train)) real[e.label].push_back(e.text);
        }
        auto provider = make_provider(gn_provider.settings);
        const auto corpus = generate_corpus(subs, real, gn_cfg, *provider, gn_prompts);
        fs::remove_all(gn_out);
        save_corpus(gn_out, corpus, gn_cfg);
        std::cerr << "generate: " << corpus.all_examples().size() << " samples for " << subs.size()
                  << " sub-intents\n";
      });
    } else if (*tn) {
      in_stage("train-ntm", [&] {
        const auto corpus = load_corpus(tn_corpus);
        const auto vocab = load_vocabulary(tn_vocab);
        tn_params.seed = tn_seed;
        NTMModel model(tn_params, vocab.size(), vocab.hash(), corpus.subintents());
        const auto fr = train_ntm(model, corpus.all_examples(), vocab, tn_epochs, tn_seed);
        save_model(tn_out, model);
        std::cerr << "train-ntm: final synthetic accuracy " << fr.epoch_accuracy.back() << '\n';
      });
    } else if (*ef) {
      in_stage("extract-features", [&] {
        const auto model = load_ntm_model(ef_model);
        const auto vocab = load_vocabulary(ef_vocab);
        if (model.vocab_hash() != vocab.hash()) throw std::invalid_argument("model and vocabulary do not match");
        const auto groups = extract_feature_groups(model, vocab, ef_delta);
        save_feature_groups(ef_out, groups, vocab.hash(), model.config_hash());
        for (const auto& g : groups) std::cerr << g.subintent.slug << ": " << g.literals.size() << " literals\n";
      });
    } else if (*en) {
      in_stage("enrich", [&] {
        const auto vocab = load_vocabulary(en_vocab);
        const auto model = load_ntm_model(en_ntm);
        const auto groups = load_feature_groups(en_groups);
        EnrichedVocabulary ev(vocab, model, groups.groups, groups.vocab_hash, parse_presence_rule(en_rule));
        const auto data = enrich_dataset(load_dataset(en_data), ev, model);
        save_enriched_dataset(en_out, data);
        save_enriched_vocabulary(en_sidecar, ev);
        std::cerr << "enrich: " << ev.injected().size() << " indicators; " << data.stats.samples_with_injection << "/"
                  << data.stats.total << " samples activated\n";
        for (std::size_t p = 0; p < model.num_pools(); ++p) {
          std::cerr << "  " << model.subintents()[p].slug << ": predicted " << data.stats.predicted[p]
                    << ", injected " << data.stats.injected[p] << '\n';
        }
      });
    } else if (*tt) {
      in_stage("train-tm", [&] {
        const FeatureSpace space = tt_space.load();
        std::vector<LabeledExample> data;
        std::vector<BowVector> xs;
        if (space.enriched()) {
          const auto ntm = load_ntm_model(tt_space.ntm);
          const auto ev = load_enriched_vocabulary(tt_space.enriched_vocab, load_vocabulary(tt_space.vocab), ntm);
          auto ed = load_enriched_dataset(tt_data, ev);
          data = std::move(ed.examples);
          xs = std::move(ed.vectors);
        } else {
          data = load_dataset(tt_data);
          for (const auto& e : data) xs.push_back(space.encode(e.text));
        }
        const auto labels = collect_labels(data);
        tt_params.num_classes = labels.size();
        TMModel model(tt_params, space.names().size(), space.names().hash(), labels);
        std::vector<std::size_t> y;
        for (const auto& e : data) y.push_back(model.class_index(e.label));
        const auto fr = fit(model, xs, y, tt_epochs, tt_params.seed);
        save_model(tt_out, model);
        std::cerr << "train-tm: final training accuracy " << fr.epoch_accuracy.back() << '\n';
      });
    } else if (*evc) {
      in_stage("eval", [&] {
        const auto model = load_tm_model(ev_model);
        const auto report = evaluate(model, load_dataset(ev_data), ev_space.load());
        write_text(ev_out, report.to_json());
      });
    } else if (*ex) {
      in_stage("explain", [&] {
        const auto model = load_tm_model(ex_model);
        const FeatureSpace space = ex_space.load();
        if (space.names().hash() != model.vocab_hash()) throw std::invalid_argument("model and feature space do not match");
        std::string text = ex_text;
        if (!ex_data.empty()) {
          const auto d = load_dataset(ex_data);
          if (ex_index >= d.size()) throw std::out_of_range("--index past the end of --data");
          text = d[ex_index].text;
        } else if (ex_text.empty()) {
          throw std::invalid_argument("give --text or --data");
        }
        const auto e = explain(model, space.encode(text), space.names());
        if (ex_json) {
          std::cout << e.to_json() << '\n';
          return;
        }
        std::cout << "predicted: " << e.predicted_label << '\n' << "scores:";
        for (std::size_t c = 0; c < e.scores.size(); ++c) std::cout << ' ' << model.class_names()[c] << '=' << e.scores[c];
        std::cout << '\n';
        for (const auto& c : e.clauses) {
          std::cout << (c.polarity > 0 ? "  + " : "  - ") << "w=" << c.weight << "  " << c.text << '\n';
        }
      });
    } else if (*rn) {
      PipelineConfig cfg;
      in_stage("config", [&] {
        cfg = PipelineConfig::load(rn_config);
        if (!rn_seeds.empty()) cfg.seeds = rn_seeds;
        if (!rn_out.empty()) cfg.output_dir = rn_out;
      });
      RunOptions opt;
      opt.force = rn_force;
      opt.log = rn_quiet ? nullptr : &std::cerr;
      const auto summary = run_pipeline(cfg, opt);
      std::cout << "accuracy " << summary.accuracy_mean << " ± " << summary.accuracy_std << "  micro-F1 "
                << summary.micro_f1_mean << " ± " << summary.micro_f1_std << "  (" << summary.runs.size()
                << " seeds)\n";
    }
  } catch (const StageError& e) {
    std::cerr << "tmboot: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
