// Acceptance checks C1-C9. One PASS/FAIL line per criterion; exit status is
// nonzero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "json.hpp"
#include "support.hpp"
#include "tmboot/bootstrap.hpp"
#include "tmboot/enrichment.hpp"
#include "tmboot/ntm.hpp"
#include "tmboot/pipeline.hpp"
#include "tmboot/serialize.hpp"
#include "tmboot/simd.hpp"
#include "tmboot/tm.hpp"

using namespace tmboot;
namespace fs = std::filesystem;
using testsupport::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Artifacts shared between criteria.
struct Shared {
  std::unique_ptr<TMModel> xor_tm;
  std::vector<BowVector> xor_test;
  std::unique_ptr<NTMModel> planted_ntm;
  std::vector<BowVector> planted_inputs;
  TempDir work;
  fs::path enriched_run;  // output dir of the enriched C5 run
};

// ---------------------------------------------------------------- C1 / C2

struct Freq {
  double reward = 0, inaction = 0, penalty = 0;
};

struct Tracked {
  std::string cell;
  bool negate_team = false;
  std::size_t k = 0;
  Freq expected;
};

constexpr int kN = 100;
constexpr std::size_t kTrials = 100000;
constexpr double kTol = 0.02;

// Runs `trials` feedback applications to a fresh copy of `make()` and checks
// the reward/inaction/penalty frequency of every tracked automaton.
template <typename Make, typename Apply, typename State>
bool measure(Make make, Apply apply, State state, const std::vector<Tracked>& cells, std::ostringstream& log) {
  std::vector<Freq> got(cells.size());
  for (std::size_t t = 0; t < kTrials; ++t) {
    auto c = make();
    std::vector<int> before;
    for (const auto& tr : cells) before.push_back(state(c, tr));
    apply(c);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const int delta = state(c, cells[i]) - before[i];
      const bool included = before[i] > kN;
      const bool reward = included ? delta > 0 : delta < 0;
      const bool penalty = included ? delta < 0 : delta > 0;
      got[i].reward += reward;
      got[i].penalty += penalty;
      got[i].inaction += delta == 0;
    }
  }
  bool ok = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Freq f{got[i].reward / kTrials, got[i].inaction / kTrials, got[i].penalty / kTrials};
    const auto& e = cells[i].expected;
    const bool cell_ok = std::abs(f.reward - e.reward) <= kTol && std::abs(f.inaction - e.inaction) <= kTol &&
                         std::abs(f.penalty - e.penalty) <= kTol;
    if (!cell_ok) {
      ok = false;
      log << " [" << cells[i].cell << ": R=" << f.reward << " I=" << f.inaction << " P=" << f.penalty << " want R="
          << e.reward << " I=" << e.inaction << " P=" << e.penalty << "]";
    }
  }
  return ok;
}

Clause make_clause(std::size_t n, std::initializer_list<int> inc, std::initializer_list<int> neg) {
  Clause c{AutomatonTeam(n, kN), AutomatonTeam(n, kN), +1, 1};
  std::size_t k = 0;
  for (int s : inc) c.include.set_state(k++, s);
  k = 0;
  for (int s : neg) c.negate.set_state(k++, s);
  return c;
}

int clause_state(const Clause& c, const Tracked& t) {
  return t.negate_team ? c.negate.state(t.k) : c.include.state(t.k);
}

Outcome c1_feedback(Shared&) {
  const auto t0 = Clock::now();
  const double s = 5.0, hi = (s - 1) / s, lo = 1 / s;
  std::ostringstream log;
  Rng rng(101);
  bool ok = true;

  // Firing clause: x0 included and present, x1 excluded and present.
  const BowVector fire_x = testsupport::bits({1, 1});
  auto fire = [] { return make_clause(2, {150, 50}, {50, 50}); };
  // Non-firing clause: x0 included but absent.
  const BowVector off_x = testsupport::bits({0, 1});
  auto off = [] { return make_clause(2, {150, 150}, {50, 50}); };

  const std::vector<Tracked> fire_i{{"I include c=1 l=1", false, 0, {hi, lo, 0}},
                                    {"I exclude c=1 l=1", false, 1, {0, lo, hi}},
                                    {"I exclude c=1 l=0", true, 0, {lo, hi, 0}}};
  const std::vector<Tracked> off_i{{"I include c=0 l=0", false, 0, {0, hi, lo}},
                                   {"I include c=0 l=1", false, 1, {0, hi, lo}},
                                   {"I exclude c=0 l=1", true, 0, {lo, hi, 0}},
                                   {"I exclude c=0 l=0", true, 1, {lo, hi, 0}}};
  ok &= measure(fire, [&](Clause& c) { type_i_feedback(c, fire_x, rng, s); }, clause_state, fire_i, log);
  ok &= measure(off, [&](Clause& c) { type_i_feedback(c, off_x, rng, s); }, clause_state, off_i, log);

  const std::vector<Tracked> fire_ii{{"II include c=1 l=1", false, 0, {0, 1, 0}},
                                     {"II exclude c=1 l=1", false, 1, {0, 1, 0}},
                                     {"II exclude c=1 l=0", true, 0, {0, 0, 1}}};
  const std::vector<Tracked> off_ii{{"II include c=0 l=0", false, 0, {0, 1, 0}},
                                    {"II include c=0 l=1", false, 1, {0, 1, 0}},
                                    {"II exclude c=0 l=1", true, 0, {0, 1, 0}},
                                    {"II exclude c=0 l=0", true, 1, {0, 1, 0}}};
  ok &= measure(fire, [&](Clause& c) { type_ii_feedback(c, fire_x); }, clause_state, fire_ii, log);
  ok &= measure(off, [&](Clause& c) { type_ii_feedback(c, off_x); }, clause_state, off_ii, log);

  const double secs = seconds_since(t0);
  ok &= secs < 10.0;
  return {ok, "14 cells x 1e5 trials, s=5, tol 0.02" + log.str() + fmt(", %.2f s", secs)};
}

Outcome c2_boosted(Shared&) {
  const auto t0 = Clock::now();
  const double s = 5.0, hi = (s - 1) / s, lo = 1 / s;
  std::ostringstream log;
  Rng rng(202);
  auto make = [](std::initializer_list<int> states) {
    MonotoneClause c{AutomatonTeam(states.size(), kN), 1};
    std::size_t k = 0;
    for (int v : states) c.include.set_state(k++, v);
    return c;
  };
  auto state = [](const MonotoneClause& c, const Tracked& t) { return c.include.state(t.k); };

  const BowVector fire_x = testsupport::bits({1, 1, 0});
  const std::vector<Tracked> fire{{"boosted include c=1 l=1", false, 0, {1, 0, 0}},
                                  {"exclude c=1 l=1", false, 1, {0, lo, hi}},
                                  {"exclude c=1 l=0", false, 2, {lo, hi, 0}}};
  const BowVector off_x = testsupport::bits({0, 1, 0, 1});
  const std::vector<Tracked> off{{"include c=0 l=0", false, 0, {0, hi, lo}},
                                 {"include c=0 l=1", false, 1, {0, hi, lo}},
                                 {"exclude c=0 l=0", false, 2, {lo, hi, 0}},
                                 {"exclude c=0 l=1", false, 3, {lo, hi, 0}}};
  bool ok = measure([&] { return make({150, 50, 50}); },
                    [&](MonotoneClause& c) { boosted_type_i_feedback(c, fire_x, rng, s); }, state, fire, log);
  ok &= measure([&] { return make({150, 150, 50, 50}); },
                [&](MonotoneClause& c) { boosted_type_i_feedback(c, off_x, rng, s); }, state, off, log);
  const double secs = seconds_since(t0);
  ok &= secs < 10.0;
  return {ok, "boosted cell reward 1.0 / penalty 0.0, 6 standard cells, 1e5 trials" + log.str() +
                  fmt(", %.2f s", secs)};
}

// ---------------------------------------------------------------- C3

Outcome c3_noisy_xor(Shared& sh) {
  const auto t0 = Clock::now();
  constexpr std::size_t kFeatures = 12;  // two XOR inputs, ten distractors
  Rng rng(303);
  auto sample = [&](std::vector<BowVector>& xs, std::vector<std::size_t>& ys, std::size_t count, double noise) {
    for (std::size_t i = 0; i < count; ++i) {
      BowVector x = testsupport::random_bits(kFeatures, rng);
      std::size_t y = x.test(0) != x.test(1) ? 1 : 0;
      if (rng.chance(noise)) y = 1 - y;
      xs.push_back(std::move(x));
      ys.push_back(y);
    }
  };
  std::vector<BowVector> train_x, test_x;
  std::vector<std::size_t> train_y, test_y;
  sample(train_x, train_y, 5000, 0.10);
  sample(test_x, test_y, 1000, 0.0);

  TMHyperParams p;
  p.num_classes = 2;
  p.clauses_per_class = 20;
  p.threshold = 15;
  p.specificity = 3.9;
  p.states_per_action = 100;
  p.weighted = false;
  p.seed = 3;
  auto tm = std::make_unique<TMModel>(p, kFeatures, "xor", std::vector<std::string>{"0", "1"});

  double acc = 0.0;
  std::size_t epoch = 0;
  while (epoch < 100 && acc < 0.95) {
    fit(*tm, train_x, train_y, 1, 3000 + epoch);
    ++epoch;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i) correct += predict(*tm, test_x[i]) == test_y[i];
    acc = static_cast<double>(correct) / static_cast<double>(test_x.size());
  }
  const double secs = seconds_since(t0);
  sh.xor_tm = std::move(tm);
  sh.xor_test = test_x;
  return {acc >= 0.95 && secs < 30.0, fmt("test accuracy %.3f", acc) + " after " + std::to_string(epoch) +
                                          " epoch(s), 12 features, 10% train noise" + fmt(", %.2f s", secs)};
}

// ---------------------------------------------------------------- C4

Outcome c4_planted(Shared& sh) {
  const auto t0 = Clock::now();
  const auto pools = testsupport::planted_pools(6, 8, "kw");
  StubConfig stub;
  for (std::size_t p = 0; p < pools.size(); ++p) {
    stub.intents.push_back({"class" + std::to_string(p / 2) + "_due_to: reason " + std::to_string(p), pools[p], {}});
  }
  StubProvider provider(stub);
  std::vector<SubIntent> subs;
  for (const auto& i : stub.intents) subs.push_back(make_sub_intent(i.name));
  GenerationConfig gen;  // 50 / 50 / 100 per sub-intent
  const auto corpus = generate_corpus(subs, {}, gen, provider);
  const auto samples = corpus.all_examples();
  const Vocabulary vocab = build_vocabulary(samples, {});

  NtmParams np;  // 150 clauses per pool, T=5000, s=5, N=100
  np.seed = 4;
  auto ntm = std::make_unique<NTMModel>(np, vocab.size(), vocab.hash(), subs);
  train_ntm(*ntm, samples, vocab, 10, 4);
  const auto groups = extract_feature_groups(*ntm, vocab, 5);

  std::ostringstream log;
  double worst = 1.0;
  for (std::size_t p = 0; p < pools.size(); ++p) {
    const std::set<std::string> want(pools[p].begin(), pools[p].end());
    const std::set<std::string> got(groups[p].literals.begin(), groups[p].literals.end());
    std::size_t inter = 0;
    for (const auto& w : got) inter += want.count(w);
    const double j = static_cast<double>(inter) / static_cast<double>(want.size() + got.size() - inter);
    worst = std::min(worst, j);
    log << (p ? " " : "") << fmt("%.2f", j);
  }
  for (const auto& ex : samples) sh.planted_inputs.push_back(binarize(ex.text, vocab));
  sh.planted_ntm = std::move(ntm);
  const double secs = seconds_since(t0);
  return {worst >= 0.8 && secs < 60.0, std::to_string(samples.size()) + " samples, |V|=" + std::to_string(vocab.size()) +
                                           ", Jaccard per pool [" + log.str() + "]" + fmt(", %.2f s", secs)};
}

// ---------------------------------------------------------------- C5 / C8

// Three classes, two sub-intents each. Real training text uses each
// sub-intent's base keywords; test text uses only the held-out synonyms,
// which appear nowhere but the enriched generation stage.
struct SynonymTask {
  fs::path dir;
  nlohmann::json cfg;

  explicit SynonymTask(const fs::path& root) : dir(root) {
    fs::create_directories(dir);
    const auto base = testsupport::planted_pools(6, 8, "kw");
    const auto syn = testsupport::planted_pools(6, 8, "syn");
    const std::vector<std::string> classes{"alpha", "beta", "gamma"};
    StubConfig stub;
    std::string subs;
    for (std::size_t p = 0; p < 6; ++p) {
      const std::string name = classes[p / 2] + "_due_to: reason " + std::to_string(p);
      stub.intents.push_back({name, base[p], syn[p]});
      subs += name + "\n";
    }
    testsupport::write(dir / "stub.json", stub_config_json(stub));
    testsupport::write(dir / "subs.txt", subs);

    const auto& filler = builtin_filler_words();
    Rng rng(55);
    auto doc = [&](const std::vector<std::string>& pool) {
      std::vector<std::string> words(pool);
      shuffle(words, rng);
      words.resize(4 + rng.below(3));
      const std::size_t fill = 10 + rng.below(5);
      for (std::size_t i = 0; i < fill; ++i) words.push_back(filler[rng.below(filler.size())]);
      shuffle(words, rng);
      std::string text;
      for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
      return text;
    };
    std::string train, test;
    for (std::size_t i = 0; i < 120; ++i) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t p = 2 * c + rng.below(2);
        train += format_record({doc(base[p]), classes[c], {}}) + "\n";
        if (i < 50) test += format_record({doc(syn[p]), classes[c], {}}) + "\n";
      }
    }
    testsupport::write(dir / "train.jsonl", train);
    testsupport::write(dir / "test.jsonl", test);

    cfg = {{"data", {{"train", "train.jsonl"}, {"test", "test.jsonl"}, {"subintents", "subs.txt"}}},
           {"provider", {{"kind", "stub"}, {"stub_config", "stub.json"}}},
           {"ntm", {{"clauses", 150}, {"threshold", 5000}, {"specificity", 5.0}, {"epochs", 10}}},
           {"tm", {{"clauses", 40}, {"threshold", 20}, {"specificity", 3.9}, {"epochs", 20}}},
           {"enrichment", {{"enabled", true}, {"rule", "attribution"}}},
           {"seeds", {1, 2, 3}},
           {"output_dir", "out"}};
  }

  PipelineConfig config(bool enrich, const std::string& out) const {
    auto c = cfg;
    c["enrichment"]["enabled"] = enrich;
    c["output_dir"] = out;
    return PipelineConfig::from_json(c.dump(), dir);
  }
};

Outcome c5_enrichment_gain(Shared& sh) {
  const auto t0 = Clock::now();
  SynonymTask task(sh.work / "synonyms");
  const auto vanilla = run_pipeline(task.config(false, "vanilla"));
  const auto enriched = run_pipeline(task.config(true, "enriched"));
  sh.enriched_run = task.dir / "enriched";
  std::ostringstream per_seed;
  for (std::size_t i = 0; i < vanilla.runs.size(); ++i) {
    per_seed << (i ? ", " : "") << "seed " << vanilla.runs[i].seed << fmt(" %.3f", vanilla.runs[i].report.accuracy)
             << fmt("->%.3f", enriched.runs[i].report.accuracy);
  }
  const double gain = enriched.accuracy_mean - vanilla.accuracy_mean;
  return {gain >= 0.10, fmt("vanilla %.3f", vanilla.accuracy_mean) + fmt(", enriched %.3f", enriched.accuracy_mean) +
                            fmt(", gain %+.1f pp", 100.0 * gain) + " (" + per_seed.str() + ")" +
                            fmt(", %.2f s", seconds_since(t0))};
}

Outcome c8_determinism(Shared& sh) {
  const auto t0 = Clock::now();
  SynonymTask task(sh.work / "determinism");
  task.cfg["seeds"] = {7};
  task.cfg["ntm"]["epochs"] = 3;
  task.cfg["tm"]["epochs"] = 5;
  testsupport::write(task.dir / "cfg.json", task.cfg.dump(2));

  auto run_once = [&](const std::string& out) {
#ifdef TMBOOT_CLI_PATH
    const std::string cmd = "cd '" + task.dir.string() + "' && '" TMBOOT_CLI_PATH "' run --config cfg.json --out " +
                            out + " --quiet >/dev/null";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw std::runtime_error("run exited with " + std::to_string(status));
#else
    auto c = PipelineConfig::load(task.dir / "cfg.json");
    c.output_dir = task.dir / out;
    run_pipeline(c);
#endif
  };
  run_once("first");
  run_once("second");

  std::vector<std::string> differ;
  const std::vector<std::string> files{"vocab.txt",           "subintents.txt",          "seed-7/ntm.model",
                                       "seed-7/featgroups.txt", "seed-7/enriched-vocab.txt", "seed-7/tm.model",
                                       "seed-7/eval.json",      "summary.json"};
  for (const auto& f : files) {
    const fs::path a = task.dir / "first" / f, b = task.dir / "second" / f;
    if (!fs::exists(a) || testsupport::slurp(a) != testsupport::slurp(b)) differ.push_back(f);
  }
  std::string detail = std::to_string(files.size()) + " artifacts compared byte for byte";
  for (const auto& d : differ) detail += " [differs: " + d + "]";
  return {differ.empty(), detail + fmt(", %.2f s", seconds_since(t0))};
}

// ---------------------------------------------------------------- C6

bool oracle_clause(const Clause& c, const BowVector& x, bool inference) {
  const int n = c.include.states_per_action();
  bool any = false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (c.include.state(k) > n) {
      any = true;
      if (!x.test(k)) return false;
    }
    if (c.negate.state(k) > n) {
      any = true;
      if (x.test(k)) return false;
    }
  }
  return any || !inference;
}

Outcome c6_oracle(Shared&) {
  const auto t0 = Clock::now();
  Rng rng(606);
  const auto& scalar = simd::scalar_kernels();
  const auto* avx2 = simd::avx2_kernels();
  const auto& original = simd::active();
  std::size_t mismatches = 0, inputs = 0;
  for (int m = 0; m < 10000; ++m) {
    simd::set_active(avx2 != nullptr && m % 2 == 1 ? *avx2 : scalar);
    const std::size_t n = 1 + rng.below(12);
    TMHyperParams p;
    p.num_classes = 2 + rng.below(3);
    p.clauses_per_class = 2 * (1 + rng.below(4));
    p.states_per_action = 1 + static_cast<int>(rng.below(50));
    p.threshold = 10;
    p.weighted = rng.chance(0.5);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < p.num_classes; ++c) names.push_back(std::to_string(c));
    TMModel model(p, n, "oracle", names);
    const int N = p.states_per_action;
    const double inc_rate = 0.5 / static_cast<double>(n);
    for (std::size_t c = 0; c < p.num_classes; ++c) {
      for (auto& cl : model.bank(c)) {
        for (std::size_t k = 0; k < n; ++k) {
          auto draw = [&] {
            return rng.chance(inc_rate) ? N + 1 + static_cast<int>(rng.below(N))
                                        : 1 + static_cast<int>(rng.below(N));
          };
          cl.include.set_state(k, draw());
          cl.negate.set_state(k, draw());
        }
        cl.weight = static_cast<std::int32_t>(rng.below(6));
      }
    }
    for (std::uint64_t bitsv = 0; bitsv < (1ULL << n); ++bitsv) {
      BowVector x(n);
      for (std::size_t k = 0; k < n; ++k) x.set(k, (bitsv >> k) & 1);
      ++inputs;
      std::vector<long> want(p.num_classes, 0);
      bool ok = true;
      for (std::size_t c = 0; c < p.num_classes; ++c) {
        for (const auto& cl : model.bank(c)) {
          const bool inf = oracle_clause(cl, x, true);
          ok &= evaluate_clause(cl, x, EvalMode::kInference) == inf;
          ok &= evaluate_clause(cl, x, EvalMode::kLearning) == oracle_clause(cl, x, false);
          if (inf) want[c] += cl.polarity * (p.weighted ? cl.weight : 1);
        }
        ok &= class_score(model, c, x) == want[c];
      }
      std::size_t best = 0;
      for (std::size_t c = 1; c < p.num_classes; ++c) {
        if (want[c] > want[best]) best = c;
      }
      ok &= predict(model, x) == best;
      mismatches += !ok;
    }
  }
  simd::set_active(original);
  return {mismatches == 0, "1e4 random models, " + std::to_string(inputs) + " exhaustive inputs, " +
                               std::to_string(mismatches) + " mismatches (scalar and " +
                               std::string(avx2 ? "avx2" : "no avx2") + " kernels)" + fmt(", %.2f s", seconds_since(t0))};
}

// ---------------------------------------------------------------- C7

Outcome c7_monotone(Shared& sh) {
  const auto t0 = Clock::now();
  std::ostringstream log;
  bool ok = true;

  // Serialized size grows by one state (2 bytes) per clause per feature;
  // a two-team clause grows by two.
  NtmParams np;
  np.clauses_per_subintent = 10;
  const std::vector<SubIntent> subs{make_sub_intent("a_due_to: x"), make_sub_intent("b_due_to: y")};
  const auto n1 = serialize(NTMModel(np, 40, "h", subs)).size();
  const auto n2 = serialize(NTMModel(np, 41, "h", subs)).size();
  TMHyperParams tp;
  tp.clauses_per_class = 10;
  const auto t1 = serialize(TMModel(tp, 40, "h", {"a", "b"})).size();
  const auto t2 = serialize(TMModel(tp, 41, "h", {"a", "b"})).size();
  const std::size_t per_feature_ntm = (n2 - n1) / 20, per_feature_tm = (t2 - t1) / 20;
  if (n2 - n1 != 20 * 2 || t2 - t1 != 20 * 4) {
    ok = false;
    log << " [bytes per clause-feature: ntm " << per_feature_ntm << ", tm " << per_feature_tm << "]";
  }

  const NTMModel& trained = *sh.planted_ntm;
  if (deserialize_ntm(serialize(trained)) != trained) {
    ok = false;
    log << " [trained NTM did not round-trip]";
  }

  // Bit-flip monotonicity on trained clauses over corpus inputs and noise.
  Rng rng(707);
  std::vector<BowVector> inputs(sh.planted_inputs.begin(), sh.planted_inputs.begin() + 300);
  for (int i = 0; i < 100; ++i) inputs.push_back(testsupport::random_bits(trained.num_features(), rng, 0.3));
  std::size_t flips = 0, violations = 0;
  for (const auto& x : inputs) {
    for (std::size_t p = 0; p < trained.num_pools(); ++p) {
      for (const auto& c : trained.pool(p)) {
        for (EvalMode mode : {EvalMode::kInference, EvalMode::kLearning}) {
          if (!evaluate_monotone_clause(c, x, mode)) continue;
          for (std::size_t k = 0; k < x.size(); ++k) {
            if (x.test(k)) continue;
            BowVector y = x;
            y.set(k);
            ++flips;
            violations += !evaluate_monotone_clause(c, y, mode);
          }
        }
      }
    }
  }
  ok &= violations == 0 && flips > 0;
  return {ok, fmt("%.0f bytes/state/clause-feature", static_cast<double>(per_feature_ntm)) + ", " +
                  std::to_string(flips) + " 0->1 flips on firing clauses, " + std::to_string(violations) +
                  " deactivations" + log.str() + fmt(", %.2f s", seconds_since(t0))};
}

// ---------------------------------------------------------------- C9

// Checks every listed clause against the automaton states directly.
std::size_t check_explanations(const TMModel& model, const Vocabulary& names, const std::vector<BowVector>& xs,
                               std::size_t& listed) {
  std::size_t bad = 0;
  const int N = model.params().states_per_action;
  for (const auto& x : xs) {
    const Explanation e = explain(model, x, names);
    if (e.predicted != predict(model, x)) ++bad;
    for (const auto& ec : e.clauses) {
      ++listed;
      const Clause& c = model.bank(e.predicted).at(ec.index);
      bool fires = false, consistent = true;
      std::size_t included = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        included += (c.include.state(k) > N) + (c.negate.state(k) > N);
      }
      fires = oracle_clause(c, x, true);
      consistent = included == ec.literals.size() && ec.polarity == c.polarity;
      for (const auto& lit : ec.literals) {
        const bool satisfied = lit.negated ? !x.test(lit.feature) : x.test(lit.feature);
        consistent = consistent && satisfied;
      }
      if (!fires || !consistent) ++bad;
    }
  }
  return bad;
}

Outcome c9_explain(Shared& sh) {
  const auto t0 = Clock::now();
  Rng rng(909);
  std::size_t listed = 0, bad = 0;

  std::vector<std::string> xor_names;
  for (int k = 0; k < 12; ++k) xor_names.push_back("x" + std::to_string(k));
  std::vector<BowVector> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(testsupport::random_bits(12, rng));
  bad += check_explanations(*sh.xor_tm, Vocabulary(xor_names), xs, listed);

  // Enriched text model from C5: half real encoded test documents, half noise.
  const fs::path seed_dir = sh.enriched_run / "seed-1";
  const auto vocab = load_vocabulary(sh.enriched_run / "vocab.txt");
  const auto ntm = std::make_shared<NTMModel>(load_ntm_model(seed_dir / "ntm.model"));
  const auto ev = load_enriched_vocabulary(seed_dir / "enriched-vocab.txt", vocab, *ntm);
  const TMModel tm = load_tm_model(seed_dir / "tm.model");
  const FeatureSpace space(ntm, ev);
  xs.clear();
  const auto test = load_dataset(sh.enriched_run.parent_path() / "test.jsonl");
  for (int i = 0; i < 500; ++i) xs.push_back(space.encode(test[rng.below(test.size())].text));
  for (int i = 0; i < 500; ++i) xs.push_back(testsupport::random_bits(tm.num_features(), rng, 0.05));
  bad += check_explanations(tm, space.names(), xs, listed);

  return {bad == 0 && listed > 0, "2 x 1000 predictions, " + std::to_string(listed) + " listed clauses, " +
                                      std::to_string(bad) + " unfaithful" + fmt(", %.2f s", seconds_since(t0))};
}

}  // namespace

int main() {
  Shared shared;
  const std::vector<std::pair<std::string, std::function<Outcome(Shared&)>>> criteria{
      {"C1 feedback-conformance", c1_feedback},  {"C2 boosted-feedback", c2_boosted},
      {"C3 noisy-xor-learnability", c3_noisy_xor}, {"C4 planted-keyword-recovery", c4_planted},
      {"C5 enrichment-gain", c5_enrichment_gain}, {"C6 oracle-equivalence", c6_oracle},
      {"C7 structural-monotonicity", c7_monotone}, {"C8 determinism", c8_determinism},
      {"C9 explanation-faithfulness", c9_explain}};
  std::cout << "kernels: " << simd::active().name << "\n";
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn(shared);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (9 - failed) << "/9 criteria passed\n";
  return failed == 0 ? 0 : 1;
}
