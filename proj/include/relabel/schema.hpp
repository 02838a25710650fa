#pragma once

#include <string>
#include <vector>

namespace relabel::schema {

// Certainty of a label mention. The integer encoding is fixed; gold vectors,
// confusion tensors and checkpointed classifier outputs all rely on it.
enum class Certainty : int {
  not_mentioned = 0,
  negative = 1,
  uncertain = 2,
  positive = 3,
};

inline constexpr int kNumClasses = 4;          // |C|
inline constexpr int kNumMentionedClasses = 3; // |C'|, the classes scored by metrics

// Parses "negative" | "uncertain" | "positive" | "not_mentioned".
Certainty certainty_from_string(const std::string& s);
const std::string& certainty_to_string(Certainty c);

enum class Category { finding, impression, crossover };

Category category_from_string(const std::string& s);
const std::string& category_to_string(Category c);

struct Label {
  std::string id;
  std::string display_name;
  Category category = Category::finding;
  // Surface strings the synthetic generator writes into templates. Never
  // empty: labels without explicit variants carry the lowercased display
  // name as their single variant.
  std::vector<std::string> variants;
};

// Ordered label ontology. The position of a label in `labels` is its output
// index l, stable across loads of the same file.
struct LabelSchema {
  std::vector<Label> labels;

  int size() const { return static_cast<int>(labels.size()); }
  const Label& at(int l) const { return labels[static_cast<std::size_t>(l)]; }

  // Index of a label id, or -1.
  int index_of(const std::string& id) const;

  bool operator==(const LabelSchema&) const = default;
};

bool operator==(const Label& a, const Label& b);

// Reads a schema file: a JSON array of {"id", "display_name", "category",
// "variants"?} objects, order significant. Throws data_error on missing
// files, parse failures, duplicate ids, unknown categories or an empty list.
LabelSchema load_schema(const std::string& path);

void save_schema(const LabelSchema& s, const std::string& path);

// The label's surface strings, lowercased.
std::vector<std::string> expand_variants(const Label& label);

// Total surface strings across the schema.
int variant_count(const LabelSchema& s);

}  // namespace relabel::schema
