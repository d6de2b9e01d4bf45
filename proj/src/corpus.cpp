#include "tmboot/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tmboot/hash.hpp"

namespace tmboot {

namespace {

// Decodes one UTF-8 sequence starting at text[i]; advances i. Malformed
// bytes decode to themselves so they survive as opaque word characters.
char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto lead = static_cast<unsigned char>(text[i]);
  int extra = 0;
  char32_t cp = lead;
  if (lead >= 0xF0 && lead < 0xF8) {
    extra = 3;
    cp = lead & 0x07;
  } else if (lead >= 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if (lead >= 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  }
  if (extra > 0 && i + static_cast<std::size_t>(extra) >= text.size()) {
    ++i;
    return lead;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto c = static_cast<unsigned char>(text[i + k]);
    if ((c & 0xC0) != 0x80) {
      ++i;
      return lead;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0xC0) return cp;
  if (cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019 || cp == 0x2018; }

bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    return std::isspace(c) || std::ispunct(c) || std::iscntrl(c);
  }
  switch (cp) {
    case 0xA0: case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x3000:
      return true;
    default:
      break;
  }
  return (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3001 && cp <= 0x3011) ||
         (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
         (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    if (is_apostrophe(cp)) continue;
    if (is_separator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    append_utf8(current, to_lower(cp));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  std::string joined;
  for (std::size_t k = 0; k < tokens_.size(); ++k) {
    if (tokens_[k].empty()) throw VocabularyError("empty token at index " + std::to_string(k));
    if (!index_.emplace(tokens_[k], k).second) {
      throw VocabularyError("duplicate token '" + tokens_[k] + "'");
    }
    joined += tokens_[k];
    joined.push_back('\n');
  }
  hash_ = sha256_hex(joined);
}

std::optional<std::size_t> Vocabulary::find(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(const std::vector<LabeledExample>& examples,
                            const VocabularyParams& params) {
  if (examples.empty()) throw VocabularyError("cannot build a vocabulary from zero examples");
  std::map<std::string, std::size_t, std::less<>> doc_freq;
  const auto& stop = english_stopwords();
  for (const auto& ex : examples) {
    auto tokens = tokenize(ex.text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) {
      if (params.remove_stopwords && stop.contains(t)) continue;
      ++doc_freq[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, df] : doc_freq) {
    if (df >= params.min_doc_freq) kept.emplace_back(token, df);
  }
  // map iteration is lexicographic, so a stable sort on frequency alone
  // leaves ties in lexicographic order.
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (kept.size() > params.max_size) kept.resize(params.max_size);
  if (kept.empty()) {
    throw VocabularyError("vocabulary is empty: no token reaches min_doc_freq=" +
                          std::to_string(params.min_doc_freq));
  }
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, df] : kept) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

BowVector binarize_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  BowVector bits(vocab.size());
  for (const auto& t : tokens) {
    if (auto k = vocab.find(t)) bits.set(*k);
  }
  return bits;
}

BowVector binarize(std::string_view text, const Vocabulary& vocab) {
  if (vocab.empty()) throw VocabularyError("binarize against an empty vocabulary");
  return binarize_tokens(tokenize(text), vocab);
}

const std::set<std::string, std::less<>>& english_stopwords() {
  static const std::set<std::string, std::less<>> words{
      "a", "about", "above", "after", "again", "against", "all", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during",
      "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
      "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself", "no", "nor",
      "not", "now", "of", "off", "on", "once", "only", "or", "other", "our", "ours",
      "ourselves", "out", "over", "own", "same", "she", "should", "so", "some", "such",
      "than", "that", "the", "their", "theirs", "them", "themselves", "then", "there",
      "these", "they", "this", "those", "through", "to", "too", "under", "until", "up",
      "very", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom",
      "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves"};
  return words;
}

LabeledExample parse_record(std::string_view line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DatasetError(where + "invalid JSON (" + e.what() + ")", line_no);
  }
  if (!record.is_object()) throw DatasetError(where + "record is not an object", line_no);
  auto required = [&](const char* field) {
    const auto it = record.find(field);
    if (it == record.end()) throw DatasetError(where + "missing \"" + field + "\"", line_no);
    if (!it->is_string()) throw DatasetError(where + "\"" + field + "\" is not a string", line_no);
    return it->get<std::string>();
  };
  LabeledExample ex;
  ex.text = required("text");
  ex.label = required("label");
  if (trim(ex.text).empty()) throw DatasetError(where + "empty \"text\"", line_no);
  if (ex.label.empty()) throw DatasetError(where + "empty \"label\"", line_no);
  if (const auto it = record.find("sub_intent"); it != record.end() && !it->is_null()) {
    if (!it->is_string()) throw DatasetError(where + "\"sub_intent\" is not a string", line_no);
    ex.sub_intent = it->get<std::string>();
  }
  return ex;
}

std::vector<LabeledExample> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_record(line, line_no));
    } catch (const DatasetError& e) {
      throw DatasetError(path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

std::string format_record(const LabeledExample& example) {
  nlohmann::ordered_json record;
  record["text"] = example.text;
  record["label"] = example.label;
  if (example.sub_intent) record["sub_intent"] = *example.sub_intent;
  return record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write dataset " + path.string());
  for (const auto& ex : examples) out << format_record(ex) << '\n';
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab, const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw VocabularyError("cannot write vocabulary " + path.string());
  out << "vocab-v1\n";
  // Tokens never contain spaces, so a "config <hash>" line is unambiguous.
  if (!config_hash.empty()) out << "config " << config_hash << '\n';
  for (const auto& t : vocab.tokens()) out << t << '\n';
}

Vocabulary load_vocabulary(const std::filesystem::path& path, std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot open vocabulary " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "vocab-v1") {
    throw VocabularyError(path.string() + ": missing vocab-v1 header");
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (tokens.empty() && line.rfind("config ", 0) == 0) {
      if (config_hash) *config_hash = line.substr(7);
      continue;
    }
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

std::vector<std::string> collect_labels(const std::vector<LabeledExample>& examples) {
  std::set<std::string> labels;
  for (const auto& ex : examples) labels.insert(ex.label);
  return {labels.begin(), labels.end()};
}

}  // namespace tmboot
