#include "tmboot/ntm.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "tmboot/feedback.hpp"
#include "tmboot/simd.hpp"

namespace tmboot {

void NtmParams::validate() const {
  if (clauses_per_subintent < 1) throw std::invalid_argument("clauses_per_subintent must be >= 1");
  if (threshold < 1) throw std::invalid_argument("threshold must be >= 1");
  if (!(specificity > 1.0)) throw std::invalid_argument("specificity must be > 1");
  if (states_per_action < 1 || states_per_action > 16383) {
    throw std::invalid_argument("states_per_action must be in [1, 16383]");
  }
}

NTMModel::NTMModel(NtmParams params, std::size_t num_features, std::string vocab_hash,
                   std::vector<SubIntent> subintents)
    : params_(params),
      num_features_(num_features),
      vocab_hash_(std::move(vocab_hash)),
      subintents_(std::move(subintents)) {
  params_.validate();
  if (subintents_.empty()) throw std::invalid_argument("NTM needs at least one sub-intent");
  for (std::size_t i = 0; i < subintents_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (subintents_[i].slug == subintents_[j].slug) {
        throw std::invalid_argument("duplicate sub-intent '" + subintents_[i].name + "'");
      }
    }
  }
  pools_.resize(subintents_.size());
  for (auto& pool : pools_) {
    pool.reserve(params_.clauses_per_subintent);
    for (std::size_t j = 0; j < params_.clauses_per_subintent; ++j) {
      pool.push_back(MonotoneClause{AutomatonTeam(num_features, params_.states_per_action), 1});
    }
  }
}

std::size_t NTMModel::subintent_index(std::string_view name_or_slug) const {
  for (std::size_t i = 0; i < subintents_.size(); ++i) {
    if (subintents_[i].name == name_or_slug || subintents_[i].slug == name_or_slug) return i;
  }
  throw ModelError("unknown sub-intent '" + std::string(name_or_slug) + "'");
}

bool evaluate_monotone_clause(const MonotoneClause& clause, const BowVector& x, EvalMode mode) {
  if (x.size() != clause.include.size()) {
    throw std::invalid_argument("input length " + std::to_string(x.size()) +
                                " does not match clause length " +
                                std::to_string(clause.include.size()));
  }
  if (mode == EvalMode::kInference && clause.empty()) return false;
  return simd::active().monotone_fires(clause.include.include_mask().words().data(),
                                       x.words().data(), x.word_count());
}

void boosted_type_i_feedback(MonotoneClause& clause, const BowVector& x, Rng& rng, double s) {
  const bool out = evaluate_monotone_clause(clause, x, EvalMode::kLearning);
  apply_feedback(clause.include, boosted_type_i_table(s), out, x, rng);
}

void monotone_type_ii_feedback(MonotoneClause& clause, const BowVector& x) {
  if (!evaluate_monotone_clause(clause, x, EvalMode::kLearning)) return;
  static const FeedbackTable table = type_ii_table();
  Rng unused(0);
  apply_feedback(clause.include, table, true, x, unused);
}

namespace {

struct PoolPass {
  std::vector<char> fired;
  int vote = 0;
};

PoolPass learning_pass(const std::vector<MonotoneClause>& pool, const BowVector& x) {
  PoolPass pass;
  pass.fired.resize(pool.size());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    pass.fired[j] = evaluate_monotone_clause(pool[j], x, EvalMode::kLearning);
    pass.vote += pass.fired[j];
  }
  return pass;
}

}  // namespace

void ntm_train_step(NTMModel& model, const BowVector& x, std::size_t target, Rng& rng) {
  const auto& p = model.params();
  if (target >= model.num_pools()) throw std::out_of_range("sub-intent index out of range");
  if (x.size() != model.num_features()) throw std::invalid_argument("input length mismatch");

  const bool has_other = model.num_pools() > 1;
  std::size_t other = target;
  if (has_other) {
    const auto r = static_cast<std::size_t>(rng.below(model.num_pools() - 1));
    other = r >= target ? r + 1 : r;
  }
  const PoolPass tp = learning_pass(model.pool(target), x);
  PoolPass op;
  if (has_other) op = learning_pass(model.pool(other), x);

  const double t = p.threshold;
  const FeedbackTable boosted = boosted_type_i_table(p.specificity);

  const double pt = (t - std::clamp<double>(tp.vote, -t, t)) / (2 * t);
  auto& pool = model.pool(target);
  for (std::size_t j = 0; j < pool.size(); ++j) {
    if (!(rng.uniform() < pt)) continue;
    apply_feedback(pool[j].include, boosted, tp.fired[j], x, rng);
    if (tp.fired[j]) ++pool[j].weight;
  }

  if (!has_other) return;
  const double po = (t + std::clamp<double>(op.vote, -t, t)) / (2 * t);
  auto& neg = model.pool(other);
  for (std::size_t j = 0; j < neg.size(); ++j) {
    if (!(rng.uniform() < po)) continue;
    if (!op.fired[j]) continue;
    monotone_type_ii_feedback(neg[j], x);
    if (neg[j].weight > 0) --neg[j].weight;
  }
}

FitResult train_ntm(NTMModel& model, const std::vector<LabeledExample>& corpus,
                    const Vocabulary& vocab, std::size_t epochs, std::uint64_t seed) {
  if (corpus.empty()) throw std::invalid_argument("train_ntm: empty corpus");
  if (vocab.hash() != model.vocab_hash() || vocab.size() != model.num_features()) {
    throw ModelError("train_ntm: vocabulary does not match model binding");
  }
  std::vector<BowVector> xs;
  std::vector<std::size_t> targets;
  xs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& ex = corpus[i];
    if (!ex.sub_intent) {
      throw ModelError("train_ntm: sample " + std::to_string(i) + " has no sub_intent");
    }
    targets.push_back(model.subintent_index(*ex.sub_intent));
    xs.push_back(binarize(ex.text, vocab));
  }
  Rng rng(seed);
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  FitResult result;
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle(order, rng);
    for (std::size_t i : order) ntm_train_step(model, xs[i], targets[i], rng);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto ranked = predict_sub_intents(model, xs[i]);
      correct += !ranked.empty() && ranked.front().subintent == targets[i];
    }
    result.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(xs.size()));
  }
  return result;
}

ConfidenceReport literal_confidence(const NTMModel& model, int delta) {
  ConfidenceReport report;
  report.delta = delta;
  report.num_features = model.num_features();
  report.conf.resize(model.num_pools());
  for (std::size_t i = 0; i < model.num_pools(); ++i) {
    const auto& pool = model.pool(i);
    auto& out = report.conf[i];
    out.resize(pool.size() * model.num_features());
    for (std::size_t j = 0; j < pool.size(); ++j) {
      for (std::size_t k = 0; k < model.num_features(); ++k) {
        out[j * model.num_features() + k] = pool[j].include.confidence(k);
      }
    }
  }
  return report;
}

std::vector<FeatureGroup> extract_feature_groups(const NTMModel& model, const Vocabulary& vocab,
                                                 int delta) {
  if (vocab.hash() != model.vocab_hash()) {
    throw ModelError("extract_feature_groups: vocabulary does not match model binding");
  }
  std::vector<FeatureGroup> groups;
  groups.reserve(model.num_pools());
  for (std::size_t i = 0; i < model.num_pools(); ++i) {
    std::unordered_map<std::size_t, int> best;
    for (const auto& clause : model.pool(i)) {
      for (std::size_t k : clause.include.include_mask().ones()) {
        const int c = clause.include.confidence(k);
        if (c <= delta) continue;
        auto [it, inserted] = best.emplace(k, c);
        if (!inserted) it->second = std::max(it->second, c);
      }
    }
    std::vector<std::pair<std::size_t, int>> ranked(best.begin(), best.end());
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return vocab.token(a.first) < vocab.token(b.first);
    });
    FeatureGroup g;
    g.subintent = model.subintents()[i];
    for (const auto& [k, c] : ranked) {
      g.literals.push_back(vocab.token(k));
      g.confidence.push_back(c);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

std::vector<SubIntentPrediction> predict_sub_intents(const NTMModel& model, const BowVector& x) {
  std::vector<SubIntentPrediction> out;
  for (std::size_t i = 0; i < model.num_pools(); ++i) {
    SubIntentPrediction pred;
    pred.subintent = i;
    const auto& pool = model.pool(i);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (evaluate_monotone_clause(pool[j], x, EvalMode::kInference)) {
        pred.fired_clauses.push_back(j);
        pred.score += pool[j].weight;
      }
    }
    if (pred.score > 0) out.push_back(std::move(pred));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  return out;
}

void save_feature_groups(const std::filesystem::path& path, const std::vector<FeatureGroup>& groups,
                         const std::string& vocab_hash, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write feature groups " + path.string());
  out << "featgroups-v1\n";
  out << "vocab " << vocab_hash << '\n';
  out << "config " << (config_hash.empty() ? "-" : config_hash) << '\n';
  for (const auto& g : groups) {
    out << '\n' << '[' << g.subintent.name << "]\n";
    for (std::size_t i = 0; i < g.literals.size(); ++i) {
      out << g.literals[i] << '\t' << g.confidence[i] << '\n';
    }
  }
}

FeatureGroupFile load_feature_groups(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open feature groups " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw ModelError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  FeatureGroupFile file;
  if (!std::getline(in, line) || line != "featgroups-v1") fail("missing featgroups-v1 header");
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("vocab ", 0) == 0 && file.groups.empty()) {
      file.vocab_hash = line.substr(6);
    } else if (line.rfind("config ", 0) == 0 && file.groups.empty()) {
      file.config_hash = line.substr(7);
      if (file.config_hash == "-") file.config_hash.clear();
    } else if (line.front() == '[') {
      const auto close = line.rfind(']');
      if (close == std::string::npos || close < 2) fail("malformed block header");
      FeatureGroup g;
      try {
        g.subintent = make_sub_intent(line.substr(1, close - 1));
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      file.groups.push_back(std::move(g));
    } else {
      if (file.groups.empty()) fail("literal outside a sub-intent block");
      const auto tab = line.find('\t');
      if (tab == std::string::npos) fail("expected '<literal>\\t<confidence>'");
      file.groups.back().literals.push_back(line.substr(0, tab));
      try {
        file.groups.back().confidence.push_back(std::stoi(line.substr(tab + 1)));
      } catch (const std::exception&) {
        fail("bad confidence value");
      }
    }
  }
  return file;
}

}  // namespace tmboot
