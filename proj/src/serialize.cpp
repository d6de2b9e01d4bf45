#include "tmboot/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tmboot {

namespace {

constexpr std::string_view kMagic = "tm-model-v1\n";

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(std::string_view s) { out_.append(s); }
  void states(std::span<const std::int16_t> s) {
    for (std::int16_t v : s) {
      u8(static_cast<std::uint8_t>(static_cast<std::uint16_t>(v)));
      u8(static_cast<std::uint8_t>(static_cast<std::uint16_t>(v) >> 8));
    }
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void states(AutomatonTeam& team) {
    for (std::size_t k = 0; k < team.size(); ++k) {
      const std::uint16_t lo = u8();
      const std::uint16_t hi = u8();
      team.set_state(k, static_cast<std::int16_t>(lo | (hi << 8)));
    }
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  // Refuses sizes the remaining bytes cannot hold, before anything is allocated.
  void expect_payload(std::uint64_t units, std::uint64_t count, std::uint64_t bytes_each) const {
    if (units != 0 && (count > remaining() / units || units * count > remaining() / bytes_each)) {
      throw ModelError("model file truncated");
    }
  }
  void expect_end() const {
    if (pos_ != in_.size()) throw ModelError("model file has trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ModelError("model file truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void header(Writer& w, std::string_view variant, const std::string& config_hash,
            const std::string& vocab_hash, std::size_t features) {
  w.raw(kMagic);
  w.str(variant);
  w.str(config_hash);
  w.str(vocab_hash);
  w.u64(features);
}

struct Header {
  std::string variant;
  std::string config_hash;
  std::string vocab_hash;
  std::size_t features = 0;
};

Header read_header(Reader& r) {
  if (r.raw(kMagic.size()) != kMagic) throw ModelError("not a tm-model-v1 file");
  Header h;
  h.variant = r.str();
  h.config_hash = r.str();
  h.vocab_hash = r.str();
  h.features = r.u64();
  if (h.features > r.remaining()) throw ModelError("model file truncated");
  return h;
}

}  // namespace

std::string serialize(const TMModel& model) {
  Writer w;
  header(w, "tm", model.config_hash(), model.vocab_hash(), model.num_features());
  const auto& p = model.params();
  w.u64(p.clauses_per_class);
  w.u64(p.num_classes);
  w.i32(p.threshold);
  w.f64(p.specificity);
  w.i32(p.states_per_action);
  w.u64(p.seed);
  w.u8(p.weighted ? 1 : 0);
  for (const auto& name : model.class_names()) w.str(name);
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    for (const Clause& clause : model.bank(c)) {
      w.u8(clause.polarity > 0 ? 1 : 0);
      w.i32(clause.weight);
      w.states(clause.include.states());
      w.states(clause.negate.states());
    }
  }
  return w.take();
}

std::string serialize(const NTMModel& model) {
  Writer w;
  header(w, "ntm", model.config_hash(), model.vocab_hash(), model.num_features());
  const auto& p = model.params();
  w.u64(p.clauses_per_subintent);
  w.i32(p.threshold);
  w.f64(p.specificity);
  w.i32(p.states_per_action);
  w.u64(p.seed);
  w.u64(model.subintents().size());
  for (const auto& si : model.subintents()) w.str(si.name);
  for (std::size_t i = 0; i < model.num_pools(); ++i) {
    for (const MonotoneClause& clause : model.pool(i)) {
      w.i32(clause.weight);
      w.states(clause.include.states());
    }
  }
  return w.take();
}

namespace {

template <typename F>
auto as_model_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ModelError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("invalid model file: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw ModelError(std::string("invalid model file: ") + e.what());
  }
}

TMModel read_tm(std::string_view bytes) {
  Reader r(bytes);
  const Header h = read_header(r);
  if (h.variant != "tm") throw ModelError("expected a tm model, found variant '" + h.variant + "'");
  TMHyperParams p;
  p.clauses_per_class = r.u64();
  p.num_classes = r.u64();
  p.threshold = r.i32();
  p.specificity = r.f64();
  p.states_per_action = r.i32();
  p.seed = r.u64();
  p.weighted = r.u8() != 0;
  if (p.num_classes > (1u << 20)) throw ModelError("implausible class count");
  std::vector<std::string> names;
  for (std::size_t c = 0; c < p.num_classes; ++c) names.push_back(r.str());
  // polarity + weight + two state arrays per clause
  r.expect_payload(p.num_classes, p.clauses_per_class, 5 + 4 * h.features);
  TMModel model(p, h.features, h.vocab_hash, std::move(names));
  model.set_config_hash(h.config_hash);
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    for (std::size_t j = 0; j < p.clauses_per_class; ++j) {
      Clause& clause = model.bank(c)[j];
      const int polarity = r.u8() != 0 ? +1 : -1;
      if (polarity != clause.polarity) throw ModelError("clause polarity breaks alternation");
      clause.weight = r.i32();
      if (clause.weight < 0) throw ModelError("negative clause weight");
      r.states(clause.include);
      r.states(clause.negate);
    }
  }
  r.expect_end();
  return model;
}

NTMModel read_ntm(std::string_view bytes) {
  Reader r(bytes);
  const Header h = read_header(r);
  if (h.variant != "ntm") throw ModelError("expected an ntm model, found variant '" + h.variant + "'");
  NtmParams p;
  p.clauses_per_subintent = r.u64();
  p.threshold = r.i32();
  p.specificity = r.f64();
  p.states_per_action = r.i32();
  p.seed = r.u64();
  const std::uint64_t count = r.u64();
  if (count > (1u << 20)) throw ModelError("implausible sub-intent count");
  std::vector<SubIntent> subintents;
  for (std::uint64_t i = 0; i < count; ++i) subintents.push_back(make_sub_intent(r.str()));
  r.expect_payload(count, p.clauses_per_subintent, 4 + 2 * h.features);
  NTMModel model(p, h.features, h.vocab_hash, std::move(subintents));
  model.set_config_hash(h.config_hash);
  for (std::size_t i = 0; i < model.num_pools(); ++i) {
    for (MonotoneClause& clause : model.pool(i)) {
      clause.weight = r.i32();
      if (clause.weight < 0) throw ModelError("negative clause weight");
      r.states(clause.include);
    }
  }
  r.expect_end();
  return model;
}

}  // namespace

TMModel deserialize_tm(std::string_view bytes) {
  return as_model_error([&] { return read_tm(bytes); });
}

NTMModel deserialize_ntm(std::string_view bytes) {
  return as_model_error([&] { return read_ntm(bytes); });
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void save_model(const std::filesystem::path& path, const TMModel& model) {
  write_file(path, serialize(model));
}

void save_model(const std::filesystem::path& path, const NTMModel& model) {
  write_file(path, serialize(model));
}

TMModel load_tm_model(const std::filesystem::path& path) { return deserialize_tm(read_file(path)); }

NTMModel load_ntm_model(const std::filesystem::path& path) { return deserialize_ntm(read_file(path)); }

std::string model_variant(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Reader r(bytes);
  return read_header(r).variant;
}

}  // namespace tmboot
