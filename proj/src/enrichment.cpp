#include "tmboot/enrichment.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace tmboot {

namespace fs = std::filesystem;

std::string_view presence_rule_name(PresenceRule rule) {
  return rule == PresenceRule::kAttribution ? "attribution" : "lexical";
}

PresenceRule parse_presence_rule(std::string_view name) {
  if (name == "attribution") return PresenceRule::kAttribution;
  if (name == "lexical") return PresenceRule::kLexical;
  throw std::invalid_argument("unknown presence rule '" + std::string(name) + "'");
}

std::string indicator_name(const SubIntent& si, std::string_view literal) {
  return si.slug + "::" + std::string(literal);
}

EnrichedVocabulary::EnrichedVocabulary(Vocabulary base, const NTMModel& ntm, const std::vector<FeatureGroup>& groups,
                                       const std::string& groups_vocab_hash, PresenceRule rule)
    : base_(std::move(base)), rule_(rule), ntm_config_hash_(ntm.config_hash()) {
  if (ntm.vocab_hash() != base_.hash()) {
    throw EnrichmentError("vocabulary mismatch: NTM bound to " + ntm.vocab_hash() + ", base vocabulary is " +
                          base_.hash());
  }
  if (groups_vocab_hash != ntm.vocab_hash()) {
    throw EnrichmentError("vocabulary mismatch: feature groups bound to " + groups_vocab_hash + ", NTM to " +
                          ntm.vocab_hash());
  }
  std::vector<const FeatureGroup*> by_pool(ntm.num_pools(), nullptr);
  for (const auto& g : groups) {
    std::size_t idx;
    try {
      idx = ntm.subintent_index(g.subintent.slug);
    } catch (const std::exception&) {
      throw EnrichmentError("feature group for unknown sub-intent '" + g.subintent.name + "'");
    }
    if (by_pool[idx] != nullptr) throw EnrichmentError("duplicate feature group for '" + g.subintent.name + "'");
    by_pool[idx] = &g;
  }
  by_subintent_.resize(ntm.num_pools());
  for (std::size_t p = 0; p < by_pool.size(); ++p) {
    if (by_pool[p] == nullptr) continue;
    std::set<std::string_view> seen;
    for (const auto& lit : by_pool[p]->literals) {
      const auto k = base_.find(lit);
      if (!k) throw EnrichmentError("feature group literal '" + lit + "' is not in the base vocabulary");
      if (!seen.insert(lit).second) throw EnrichmentError("duplicate literal '" + lit + "' in " + by_pool[p]->subintent.name);
      by_subintent_[p].push_back(injected_.size());
      injected_.push_back({p, *k, indicator_name(ntm.subintents()[p], lit)});
    }
  }
}

Vocabulary EnrichedVocabulary::as_vocabulary() const {
  std::vector<std::string> names = base_.tokens();
  for (const auto& ind : injected_) names.push_back(ind.name);
  return Vocabulary(std::move(names));
}

EnrichedVector enrich_vector(const BowVector& base, const NTMModel& ntm, const EnrichedVocabulary& ev) {
  if (base.size() != ev.base().size()) throw EnrichmentError("input width does not match the base vocabulary");
  BitVector injected(ev.injected().size());
  if (ev.injected().empty()) return BitVector::concat(base, injected);
  for (const auto& pred : predict_sub_intents(ntm, base)) {
    for (std::size_t j : ev.indicators_of(pred.subintent)) {
      if (ev.rule() == PresenceRule::kLexical && !base.test(ev.injected()[j].literal)) continue;
      injected.set(j);
    }
  }
  return BitVector::concat(base, injected);
}

EnrichedVector enrich_example(std::string_view text, const NTMModel& ntm, const EnrichedVocabulary& ev) {
  return enrich_vector(binarize(text, ev.base()), ntm, ev);
}

EnrichedDataset enrich_dataset(const std::vector<LabeledExample>& dataset, const EnrichedVocabulary& ev,
                               const NTMModel& ntm) {
  EnrichedDataset out;
  out.vocab = ev;
  out.examples = dataset;
  out.stats.predicted.assign(ntm.num_pools(), 0);
  out.stats.injected.assign(ntm.num_pools(), 0);
  out.stats.total = dataset.size();
  const std::size_t n = ev.base().size();
  for (const auto& ex : dataset) {
    const BowVector base = binarize(ex.text, ev.base());
    for (const auto& pred : predict_sub_intents(ntm, base)) ++out.stats.predicted[pred.subintent];
    EnrichedVector v = enrich_vector(base, ntm, ev);
    bool any = false;
    for (std::size_t p = 0; p < ntm.num_pools(); ++p) {
      for (std::size_t j : ev.indicators_of(p)) {
        if (v.test(n + j)) {
          ++out.stats.injected[p];
          any = true;
          break;
        }
      }
    }
    if (any) ++out.stats.samples_with_injection;
    out.vectors.push_back(std::move(v));
  }
  return out;
}

void save_enriched_vocabulary(const fs::path& path, const EnrichedVocabulary& ev) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnrichmentError("cannot write " + path.string());
  out << "enriched-vocab-v1\n";
  out << "base " << ev.base().hash() << '\n';
  out << "ntm " << (ev.ntm_config_hash().empty() ? "-" : ev.ntm_config_hash()) << '\n';
  out << "rule " << presence_rule_name(ev.rule()) << '\n';
  out << "count " << ev.injected().size() << '\n';
  for (const auto& ind : ev.injected()) out << ind.name << '\n';
  if (!out) throw EnrichmentError("write failed for " + path.string());
}

namespace {

std::string expect_field(std::istream& in, const std::string& key, const fs::path& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
    throw EnrichmentError(path.string() + ": expected '" + key + "' line");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

EnrichedVocabulary load_enriched_vocabulary(const fs::path& path, const Vocabulary& base, const NTMModel& ntm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnrichmentError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "enriched-vocab-v1") {
    throw EnrichmentError(path.string() + ": not an enriched-vocab-v1 file");
  }
  const std::string base_hash = expect_field(in, "base", path);
  if (base_hash != base.hash()) {
    throw EnrichmentError(path.string() + ": vocabulary mismatch (file " + base_hash + ", given " + base.hash() + ")");
  }
  std::string ntm_hash = expect_field(in, "ntm", path);
  if (ntm_hash == "-") ntm_hash.clear();
  if (ntm_hash != ntm.config_hash()) throw EnrichmentError(path.string() + ": written for a different NTM model");
  const PresenceRule rule = parse_presence_rule(expect_field(in, "rule", path));
  const std::size_t count = std::stoul(expect_field(in, "count", path));

  // Rebuild groups in file order, then let the constructor re-validate.
  std::vector<FeatureGroup> groups;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++seen;
    const auto sep = line.find("::");
    if (sep == std::string::npos) throw EnrichmentError(path.string() + ": malformed indicator '" + line + "'");
    const std::string slug = line.substr(0, sep);
    std::size_t p;
    try {
      p = ntm.subintent_index(slug);
    } catch (const std::exception&) {
      throw EnrichmentError(path.string() + ": unknown sub-intent '" + slug + "'");
    }
    if (groups.empty() || groups.back().subintent.slug != slug) groups.push_back({ntm.subintents()[p], {}, {}});
    groups.back().literals.push_back(line.substr(sep + 2));
    groups.back().confidence.push_back(0);
  }
  if (seen != count) throw EnrichmentError(path.string() + ": indicator count does not match header");
  EnrichedVocabulary ev(base, ntm, groups, ntm.vocab_hash(), rule);
  std::size_t k = 0;
  for (const auto& g : groups) {
    for (const auto& lit : g.literals) {
      if (ev.injected()[k++].name != indicator_name(g.subintent, lit)) {
        throw EnrichmentError(path.string() + ": indicators are not in sub-intent order");
      }
    }
  }
  return ev;
}

void save_enriched_dataset(const fs::path& path, const EnrichedDataset& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EnrichmentError("cannot write " + path.string());
  const std::size_t n = data.vocab.base().size();
  for (std::size_t i = 0; i < data.examples.size(); ++i) {
    const auto& ex = data.examples[i];
    nlohmann::ordered_json r;
    r["text"] = ex.text;
    r["label"] = ex.label;
    if (ex.sub_intent) r["sub_intent"] = *ex.sub_intent;
    r["injected"] = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < data.vocab.injected().size(); ++j) {
      if (data.vectors[i].test(n + j)) r["injected"].push_back(data.vocab.injected()[j].name);
    }
    out << r.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }
}

EnrichedDataset load_enriched_dataset(const fs::path& path, const EnrichedVocabulary& ev) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EnrichmentError("cannot read " + path.string());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < ev.injected().size(); ++j) index.emplace(ev.injected()[j].name, j);

  EnrichedDataset data;
  data.vocab = ev;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    LabeledExample ex = parse_record(line, line_no);
    BitVector injected(ev.injected().size());
    const auto r = nlohmann::json::parse(line);
    if (auto it = r.find("injected"); it != r.end()) {
      for (const auto& name : *it) {
        auto f = index.find(name.get<std::string>());
        if (f == index.end()) {
          throw DatasetError(path.string() + ": line " + std::to_string(line_no) + ": unknown indicator " +
                                 name.get<std::string>(),
                             line_no);
        }
        injected.set(f->second);
      }
    }
    BitVector v = BitVector::concat(binarize(ex.text, ev.base()), injected);
    data.vectors.push_back(std::move(v));
    data.examples.push_back(std::move(ex));
  }
  return data;
}

}  // namespace tmboot
