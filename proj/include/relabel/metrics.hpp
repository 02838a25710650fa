#pragma once

#include <array>
#include <string>
#include <vector>

#include "relabel/schema.hpp"

namespace relabel::metrics {

// The not_mentioned class never appears here: scoring covers C' only.
inline const std::vector<int>& all_mentioned_classes() {
  static const std::vector<int> cs = {static_cast<int>(schema::Certainty::negative),
                                      static_cast<int>(schema::Certainty::uncertain),
                                      static_cast<int>(schema::Certainty::positive)};
  return cs;
}

// Per-label, per-mentioned-class TP/FP/FN counts plus the raw
// (gold, predicted) pair counts each label accumulated.
class Confusion {
 public:
  explicit Confusion(int n_labels);

  int n_labels() const { return static_cast<int>(pairs_.size()); }

  // preds/golds hold one certainty code per label. Pairs where gold and
  // prediction are both not_mentioned contribute nothing anywhere.
  void add(const std::vector<int>& pred, const std::vector<int>& gold);
  void merge(const Confusion& other);

  long tp(int label, int cls) const { return cell(tp_, label, cls); }
  long fp(int label, int cls) const { return cell(fp_, label, cls); }
  long fn(int label, int cls) const { return cell(fn_, label, cls); }
  long pair_count(int label, int gold, int pred) const {
    return pairs_[static_cast<std::size_t>(label)][static_cast<std::size_t>(gold)]
                 [static_cast<std::size_t>(pred)];
  }

  // Whether the label has any gold or predicted mention in the classes.
  bool supported(int label, const std::vector<int>& classes) const;

 private:
  static long cell(const std::vector<std::array<long, 4>>& m, int label, int cls) {
    return m[static_cast<std::size_t>(label)][static_cast<std::size_t>(cls)];
  }
  std::vector<std::array<long, 4>> tp_, fp_, fn_;  // indexed by certainty code; slot 0 unused
  std::vector<std::array<std::array<long, 4>, 4>> pairs_;
};

// F1 over counts pooled across every label and the given classes; 0 when
// the denominator vanishes.
double f1_micro(const Confusion& c, const std::vector<int>& classes);

// Per-label F1 over the pooled classes, averaged over labels with support
// there; 0 (with no labels to average) when nothing has support.
double f1_macro(const Confusion& c, const std::vector<int>& classes);

// F1 of one label over the pooled classes.
double f1_label(const Confusion& c, int label, const std::vector<int>& classes);

struct ErrorBreakdown {
  long missed = 0;               // gold mentioned, predicted not_mentioned
  long falsely_predicted = 0;    // gold not_mentioned, predicted mentioned
  long certainty_confusion = 0;  // both mentioned, classes differ

  long total() const { return missed + falsely_predicted + certainty_confusion; }
  double proportion(long part) const {
    return total() == 0 ? 0.0 : static_cast<double>(part) / static_cast<double>(total());
  }
};

ErrorBreakdown categorize_errors(const std::vector<std::vector<int>>& preds,
                                 const std::vector<std::vector<int>>& golds);

struct EvalReport {
  // Index 0 = All (pooled mentioned classes), then negative, uncertain,
  // positive.
  std::array<double, 4> micro{};
  std::array<double, 4> macro_{};
  std::vector<std::array<double, 4>> per_label;  // same column layout
  ErrorBreakdown errors;
};

EvalReport build_report(const Confusion& c, const std::vector<std::vector<int>>& preds,
                        const std::vector<std::vector<int>>& golds);

// Summary text block: micro/macro rows by class columns, then the error
// proportions.
std::string format_report(const EvalReport& r, const schema::LabelSchema& sch);

// Per-label CSV (label_id, f1_all, f1_negative, f1_uncertain, f1_positive).
void write_per_label_csv(const EvalReport& r, const schema::LabelSchema& sch,
                         const std::string& path);

// Error-category CSV (category, count, proportion).
void write_error_csv(const EvalReport& r, const std::string& path);

}  // namespace relabel::metrics
