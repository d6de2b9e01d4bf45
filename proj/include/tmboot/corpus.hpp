#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tmboot/bitvec.hpp"

namespace tmboot {

/// Boolean presence vector over a fixed vocabulary.
using BowVector = BitVector;

struct LabeledExample {
  std::string text;
  std::string label;
  std::optional<std::string> sub_intent;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  /// 1-based line number of the offending record, 0 when not line-specific.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowercase, strip punctuation, split on whitespace. Apostrophes are
/// dropped inside words ("don't" -> "dont"); every other punctuation mark
/// separates tokens. UTF-8 aware for Latin-1, Latin Extended-A, Greek and
/// Cyrillic case folding and the common Unicode punctuation blocks.
std::vector<std::string> tokenize(std::string_view text);

struct VocabularyParams {
  std::size_t min_doc_freq = 2;
  std::size_t max_size = 20000;
  /// Opt-in stop-word filtering with the built-in English list.
  bool remove_stopwords = false;
};

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(std::size_t k) const { return tokens_[k]; }
  std::optional<std::size_t> find(std::string_view token) const;

  /// Identity hash over the ordered token list.
  const std::string& hash() const { return hash_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string hash_;
};

Vocabulary build_vocabulary(const std::vector<LabeledExample>& examples,
                            const VocabularyParams& params = {});

BowVector binarize(std::string_view text, const Vocabulary& vocab);
BowVector binarize_tokens(const std::vector<std::string>& tokens, const Vocabulary& vocab);

const std::set<std::string, std::less<>>& english_stopwords();

// Line-delimited JSON records: {"text": ..., "label": ..., "sub_intent": ...}.
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const std::vector<LabeledExample>& examples);
LabeledExample parse_record(std::string_view line, std::size_t line_no);
std::string format_record(const LabeledExample& example);

// "vocab-v1" header followed by one token per line in index order.
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab,
                     const std::string& config_hash = {});
Vocabulary load_vocabulary(const std::filesystem::path& path, std::string* config_hash = nullptr);

/// Sorted unique labels; the class index of a label is its position here.
std::vector<std::string> collect_labels(const std::vector<LabeledExample>& examples);

}  // namespace tmboot
