#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "relabel/rng.hpp"
#include "relabel/schema.hpp"

namespace relabel::corpus {

// One annotated sentence. Labels absent from `annotations` are
// not_mentioned.
struct AnnotatedSentence {
  std::string report_id;
  std::string text;
  std::map<std::string, schema::Certainty> annotations;

  bool operator==(const AnnotatedSentence&) const = default;
};

using Dataset = std::vector<AnnotatedSentence>;

// Token-to-id map with two reserved entries: 0 pads, 1 stands in for
// out-of-vocabulary tokens. Real tokens get dense ids from 2 up, most
// frequent first (ties alphabetical).
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  int size() const { return static_cast<int>(tokens_.size()); }
  int id_of(const std::string& token) const;  // kUnk for unknown tokens
  const std::string& token_of(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // Appends the next real token; ids follow insertion order.
  void add(const std::string& token);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Fixed-length id sequence plus the gold certainty per label.
struct EncodedExample {
  std::vector<int> token_ids;  // length exactly n_tok, zero padded
  int real_length = 0;
  std::vector<int> gold;       // length n_L, values are Certainty codes
};

// Lowercases, strips punctuation and symbol characters, splits on
// whitespace. Hyphens and dashes separate tokens ("grey-white" becomes two).
std::vector<std::string> tokenize(const std::string& text);

// Tokens with frequency >= min_count, ordered by descending frequency then
// token text, after the two reserved entries.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count);

// Ids for the first n_tok tokens (right truncation), zero padded.
EncodedExample encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, int n_tok);

// Gold vector for a sentence under the given schema (not_mentioned wherever
// unannotated).
std::vector<int> gold_vector(const AnnotatedSentence& s, const schema::LabelSchema& sch);

// Seeded partition of report ids; every sentence follows its report, the
// train side receives round(train_fraction * n_reports) reports and both
// sides stay non-empty. Throws on fewer than 2 reports or a fraction
// outside (0,1).
std::pair<Dataset, Dataset> split_by_report(const Dataset& data, double train_fraction,
                                            std::uint64_t seed);

// Dataset files are JSON Lines: one object per sentence with report_id,
// text, and a labels map from label id to certainty. Unknown label ids or
// certainty strings are rejected against the schema with the line number.
Dataset load_dataset(const std::string& path, const schema::LabelSchema& sch);
void save_dataset(const Dataset& data, const std::string& path);

// Vocabulary files are plain text, one token per line, starting with the
// two reserved lines "<pad>" and "<unk>"; a token's id is its line number
// minus one.
void save_vocab(const Vocabulary& v, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace relabel::corpus
