#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "relabel/corpus.hpp"
#include "relabel/errors.hpp"
#include "relabel/metrics.hpp"
#include "relabel/model.hpp"
#include "relabel/schema.hpp"

namespace relabel::training {

using autodiff::Graph;
using autodiff::ParamStore;
using autodiff::Tensor;
using autodiff::Var;

// Per-label loss weights: (n / o_l)^beta for a not_mentioned gold class and
// (n / (n - o_l))^beta for a mentioned one, where o_l counts training
// sentences not mentioning label l. Weights differ across labels, never
// across the mentioned classes.
struct LossWeights {
  double beta = 1.0;
  long n = 0;
  std::vector<long> o_l;
  std::vector<double> w_not_mentioned;
  std::vector<double> w_mentioned;
  bool clamped = false;  // some o_l hit 0 or n and was pulled inside [1, n-1]
};

LossWeights compute_label_weights(const corpus::Dataset& train, const schema::LabelSchema& sch,
                                  double beta);

// Weighted categorical cross entropy of one example, averaged over labels:
//   (1/n_L) sum_l w(l, gold_l) * (-log softmax(logits_l)[gold_l])
template <typename S>
Var<S> example_loss(Graph<S>& g, Var<S> logits, const std::vector<int>& gold,
                    const LossWeights& w) {
  const Tensor<S>& L = g.value(logits);
  const int n_labels = L.rows(), n_classes = L.cols();
  if (static_cast<int>(gold.size()) != n_labels)
    throw shape_error("gold vector length does not match the logits rows");

  Tensor<S> onehot = Tensor<S>::zeros(L.dims);
  Tensor<S> weight_col = Tensor<S>::zeros({n_labels, 1});
  for (int l = 0; l < n_labels; ++l) {
    const int cls = gold[static_cast<std::size_t>(l)];
    if (cls < 0 || cls >= n_classes) throw data_error("gold certainty code out of range");
    onehot.at(l, cls) = S(1);
    weight_col.at(l, 0) = static_cast<S>(
        cls == static_cast<int>(schema::Certainty::not_mentioned)
            ? w.w_not_mentioned[static_cast<std::size_t>(l)]
            : w.w_mentioned[static_cast<std::size_t>(l)]);
  }

  Var<S> probs = softmax_rows(logits);
  Var<S> gold_probs = matmul(mul(probs, g.constant(std::move(onehot))),
                             g.constant(Tensor<S>::full({n_classes, 1}, S(1))));
  Var<S> weighted = mul(vlog(gold_probs), g.constant(std::move(weight_col)));
  return scale(sum_all(weighted), -1.0 / static_cast<double>(n_labels));
}

// Adam with bias correction. State is kept per parameter name and the update
// walks parameters in store order, so a run's arithmetic is fully ordered.
template <typename S>
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

  long steps() const { return t_; }

  void step(ParamStore<S>& ps) {
    ++t_;
    const S c1 = S(1) - static_cast<S>(std::pow(b1_, static_cast<double>(t_)));
    const S c2 = S(1) - static_cast<S>(std::pow(b2_, static_cast<double>(t_)));
    for (const std::string& name : ps.names()) {
      Tensor<S>& p = ps.at(name);
      const Tensor<S>& g = ps.grad(name);
      if (!g.all_finite()) throw numeric_error("non-finite gradient for parameter " + name);
      auto& m = state(m_, name, p);
      auto& v = state(v_, name, p);
      m.v = static_cast<S>(b1_) * m.v + (S(1) - static_cast<S>(b1_)) * g.v;
      v.v = static_cast<S>(b2_) * v.v + (S(1) - static_cast<S>(b2_)) * g.v.square();
      p.v -= static_cast<S>(lr_) * (m.v / c1) / ((v.v / c2).sqrt() + static_cast<S>(eps_));
    }
  }

 private:
  Tensor<S>& state(std::unordered_map<std::string, Tensor<S>>& table, const std::string& name,
                   const Tensor<S>& like) {
    auto it = table.find(name);
    if (it == table.end()) it = table.emplace(name, Tensor<S>::zeros(like.dims)).first;
    return it->second;
  }

  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::unordered_map<std::string, Tensor<S>> m_, v_;
};

struct TrainConfig {
  model::ModelConfig model;  // n_labels and vocab_size are filled in by the trainer
  double lr = 0.0005;
  int batch = 16;
  double beta = 1.0;
  int max_epochs = 200;
  int patience = 25;
  std::uint64_t seed = 1;
  int min_count = 1;
  std::string embeddings_path;  // optional pretrained-embedding text file
  // Early exit once validation micro F1 reaches this value; negative
  // disables it. Used by memorization experiments.
  double stop_when_val_f1 = -1.0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_micro_f1 = 0.0;
  double val_macro_f1 = 0.0;
};

struct TrainResult {
  model::ModelConfig config;
  ParamStore<double> params;  // parameters of the best epoch
  corpus::Vocabulary vocab;
  LossWeights weights;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_micro = 0.0;
};

// Full training run: vocabulary construction, seeded initialization,
// shuffled mini-batches, Adam updates, per-epoch validation micro F1
// (mentioned classes only) with strict-improvement early stopping, and
// best-epoch parameter restoration. Optional log stream receives per-epoch
// progress lines and warnings.
TrainResult train_model(const TrainConfig& tc, const schema::LabelSchema& sch,
                        const corpus::Dataset& train, const corpus::Dataset& val,
                        std::ostream* log = nullptr);

void write_history_csv(const std::vector<EpochRecord>& history, const std::string& path);

// Encodes a dataset against a vocabulary and schema.
std::vector<corpus::EncodedExample> encode_dataset(const corpus::Dataset& data,
                                                   const corpus::Vocabulary& vocab,
                                                   const schema::LabelSchema& sch, int n_tok);

}  // namespace relabel::training
