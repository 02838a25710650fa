#include "relabel/metrics.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "relabel/errors.hpp"

namespace relabel::metrics {

namespace {

constexpr int kNotMentioned = static_cast<int>(schema::Certainty::not_mentioned);

void check_vector(const std::vector<int>& v, int n_labels, const char* what) {
  if (static_cast<int>(v.size()) != n_labels)
    throw data_error(std::string(what) + " vector length does not match the label count");
  for (int c : v)
    if (c < 0 || c >= schema::kNumClasses)
      throw data_error(std::string(what) + " vector holds an invalid certainty code");
}

double f1_from_counts(long tp, long fp, long fn) {
  const long denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

Confusion::Confusion(int n_labels) {
  if (n_labels < 1) throw error("confusion needs at least one label");
  tp_.assign(static_cast<std::size_t>(n_labels), {});
  fp_.assign(static_cast<std::size_t>(n_labels), {});
  fn_.assign(static_cast<std::size_t>(n_labels), {});
  pairs_.assign(static_cast<std::size_t>(n_labels), {});
}

void Confusion::add(const std::vector<int>& pred, const std::vector<int>& gold) {
  check_vector(pred, n_labels(), "prediction");
  check_vector(gold, n_labels(), "gold");
  for (int l = 0; l < n_labels(); ++l) {
    const int p = pred[static_cast<std::size_t>(l)];
    const int g = gold[static_cast<std::size_t>(l)];
    if (p == kNotMentioned && g == kNotMentioned) continue;
    ++pairs_[static_cast<std::size_t>(l)][static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    for (int c : all_mentioned_classes()) {
      if (g == c && p == c) ++tp_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)];
      if (p == c && g != c) ++fp_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)];
      if (g == c && p != c) ++fn_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)];
    }
  }
}

void Confusion::merge(const Confusion& other) {
  if (other.n_labels() != n_labels()) throw error("confusion label counts differ");
  for (int l = 0; l < n_labels(); ++l) {
    for (int c = 0; c < schema::kNumClasses; ++c) {
      tp_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] += other.tp(l, c);
      fp_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] += other.fp(l, c);
      fn_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] += other.fn(l, c);
      for (int p = 0; p < schema::kNumClasses; ++p)
        pairs_[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)]
              [static_cast<std::size_t>(p)] += other.pair_count(l, c, p);
    }
  }
}

bool Confusion::supported(int label, const std::vector<int>& classes) const {
  for (int c : classes)
    if (tp(label, c) + fp(label, c) + fn(label, c) > 0) return true;
  return false;
}

double f1_micro(const Confusion& c, const std::vector<int>& classes) {
  if (classes.empty()) throw error("micro F1 needs a non-empty class subset");
  long tp = 0, fp = 0, fn = 0;
  for (int l = 0; l < c.n_labels(); ++l) {
    for (int cls : classes) {
      tp += c.tp(l, cls);
      fp += c.fp(l, cls);
      fn += c.fn(l, cls);
    }
  }
  return f1_from_counts(tp, fp, fn);
}

double f1_label(const Confusion& c, int label, const std::vector<int>& classes) {
  long tp = 0, fp = 0, fn = 0;
  for (int cls : classes) {
    tp += c.tp(label, cls);
    fp += c.fp(label, cls);
    fn += c.fn(label, cls);
  }
  return f1_from_counts(tp, fp, fn);
}

double f1_macro(const Confusion& c, const std::vector<int>& classes) {
  if (classes.empty()) throw error("macro F1 needs a non-empty class subset");
  double sum = 0.0;
  int supported = 0;
  for (int l = 0; l < c.n_labels(); ++l) {
    if (!c.supported(l, classes)) continue;
    sum += f1_label(c, l, classes);
    ++supported;
  }
  return supported == 0 ? 0.0 : sum / static_cast<double>(supported);
}

ErrorBreakdown categorize_errors(const std::vector<std::vector<int>>& preds,
                                 const std::vector<std::vector<int>>& golds) {
  if (preds.size() != golds.size()) throw data_error("prediction and gold set sizes differ");
  ErrorBreakdown b;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& g = golds[i];
    if (p.size() != g.size()) throw data_error("prediction and gold vector lengths differ");
    for (std::size_t l = 0; l < p.size(); ++l) {
      if (p[l] == g[l]) continue;
      if (g[l] != kNotMentioned && p[l] == kNotMentioned)
        ++b.missed;
      else if (g[l] == kNotMentioned && p[l] != kNotMentioned)
        ++b.falsely_predicted;
      else
        ++b.certainty_confusion;
    }
  }
  return b;
}

EvalReport build_report(const Confusion& c, const std::vector<std::vector<int>>& preds,
                        const std::vector<std::vector<int>>& golds) {
  EvalReport r;
  const auto& all = all_mentioned_classes();
  std::array<std::vector<int>, 4> columns = {
      all, {all[0]}, {all[1]}, {all[2]}};
  for (int k = 0; k < 4; ++k) {
    r.micro[static_cast<std::size_t>(k)] = f1_micro(c, columns[static_cast<std::size_t>(k)]);
    r.macro_[static_cast<std::size_t>(k)] = f1_macro(c, columns[static_cast<std::size_t>(k)]);
  }
  r.per_label.resize(static_cast<std::size_t>(c.n_labels()));
  for (int l = 0; l < c.n_labels(); ++l)
    for (int k = 0; k < 4; ++k)
      r.per_label[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] =
          f1_label(c, l, columns[static_cast<std::size_t>(k)]);
  r.errors = categorize_errors(preds, golds);
  return r;
}

std::string format_report(const EvalReport& r, const schema::LabelSchema& sch) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "            All     Negative  Uncertain  Positive\n";
  os << "F1 micro    " << r.micro[0] << "  " << r.micro[1] << "    " << r.micro[2] << "     "
     << r.micro[3] << "\n";
  os << "F1 macro    " << r.macro_[0] << "  " << r.macro_[1] << "    " << r.macro_[2] << "     "
     << r.macro_[3] << "\n";
  const long total = r.errors.total();
  os << "\nErrors: " << total << "\n";
  if (total > 0) {
    os << "  missed labels        " << r.errors.missed << " ("
       << 100.0 * r.errors.proportion(r.errors.missed) << "%)\n";
    os << "  falsely predicted    " << r.errors.falsely_predicted << " ("
       << 100.0 * r.errors.proportion(r.errors.falsely_predicted) << "%)\n";
    os << "  certainty confusion  " << r.errors.certainty_confusion << " ("
       << 100.0 * r.errors.proportion(r.errors.certainty_confusion) << "%)\n";
  }
  (void)sch;
  return os.str();
}

void write_per_label_csv(const EvalReport& r, const schema::LabelSchema& sch,
                         const std::string& path) {
  if (static_cast<int>(r.per_label.size()) != sch.size())
    throw error("report label count does not match the schema");
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write per-label report: " + path);
  os << "label_id,f1_all,f1_negative,f1_uncertain,f1_positive\n";
  os << std::setprecision(17);
  for (int l = 0; l < sch.size(); ++l) {
    const auto& row = r.per_label[static_cast<std::size_t>(l)];
    os << sch.at(l).id << "," << row[0] << "," << row[1] << "," << row[2] << "," << row[3] << "\n";
  }
}

void write_error_csv(const EvalReport& r, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write error report: " + path);
  os << "category,count,proportion\n";
  os << std::setprecision(17);
  os << "missed," << r.errors.missed << "," << r.errors.proportion(r.errors.missed) << "\n";
  os << "falsely_predicted," << r.errors.falsely_predicted << ","
     << r.errors.proportion(r.errors.falsely_predicted) << "\n";
  os << "certainty_confusion," << r.errors.certainty_confusion << ","
     << r.errors.proportion(r.errors.certainty_confusion) << "\n";
}

}  // namespace relabel::metrics
