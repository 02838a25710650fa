#pragma once

#include <string>
#include <vector>

#include "relabel/corpus.hpp"
#include "relabel/encoders.hpp"
#include "relabel/heads.hpp"
#include "relabel/schema.hpp"

namespace relabel::model {

using autodiff::Graph;
using autodiff::ParamBinding;
using autodiff::ParamStore;
using autodiff::Tensor;
using autodiff::Var;

// Wiring of one encoder and one head plus the dataset dimensions they share.
struct ModelConfig {
  encoders::EncoderKind encoder = encoders::EncoderKind::bigru;
  heads::HeadKind head = heads::HeadKind::per_label_attention;
  bool deep_classifier = false;
  bool strict_parity = false;
  int n_tok = 50;
  int embed_dim = 200;
  int hidden = 1024;
  int n_labels = 0;
  int n_classes = schema::kNumClasses;
  int vocab_size = 0;

  int repr_width() const { return encoder_config().repr_width(); }

  encoders::EncoderConfig encoder_config() const {
    return {encoder, n_tok, embed_dim, hidden, strict_parity};
  }

  heads::HeadConfig head_config() const {
    return {head, deep_classifier, n_labels, n_classes, repr_width()};
  }

  bool has_attention() const { return head != heads::HeadKind::pooled; }

  // Throws on inconsistent combinations (non-positive dims, deep classifier
  // on the pooled head, odd hidden sizes).
  void validate() const;
};

void save_model_config(const ModelConfig& cfg, const std::string& path);
ModelConfig load_model_config(const std::string& path);

// Creates every parameter in a fixed order (embedding, encoder, head) and
// initializes them from the seeded stream, so (config, seed) determines all
// values bitwise.
template <typename S>
void init_params(ParamStore<S>& ps, const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  encoders::create_encoder_params(ps, cfg.encoder_config(), cfg.vocab_size, rng);
  heads::create_head_params(ps, cfg.head_config(), rng);
}

template <typename S>
struct ExampleGraph {
  Var<S> logits;        // [n_labels x n_classes]
  Var<S> alpha;         // attention rows over processed positions; invalid for pooled heads
  int processed = 0;    // columns of alpha / rows of r the graph covered
};

// Records the full forward pass for one example on the given graph. Several
// examples may share one graph (and therefore one set of parameter leaves)
// to form a batch.
template <typename S>
ExampleGraph<S> build_example(Graph<S>& g, ParamBinding<S>& P, const ModelConfig& cfg,
                              const corpus::EncodedExample& ex) {
  ExampleGraph<S> out;
  const auto ec = cfg.encoder_config();
  out.processed = static_cast<int>(encoders::graph_token_ids(ex, ec).size());
  if (cfg.head == heads::HeadKind::pooled) {
    out.logits = heads::pooled_head(g, P, encoders::encoder_pooled(g, P, ex, ec), cfg.head_config());
  } else {
    Var<S> r = encoders::encoder_repr(g, P, ex, ec);
    auto att = heads::attention_head(g, P, r, cfg.head_config());
    out.logits = att.logits;
    out.alpha = att.alpha;
  }
  return out;
}

// First index of the row maximum.
template <typename S>
int argmax_row(const Tensor<S>& t, int row) {
  int best = 0;
  for (int j = 1; j < t.cols(); ++j)
    if (t.at(row, j) > t.at(row, best)) best = j;
  return best;
}

template <typename S>
struct Prediction {
  Tensor<S> logits;         // [n_labels x n_classes]
  Tensor<S> probabilities;  // row-softmaxed logits
  Tensor<S> alpha;          // [rows x n_tok], zero on unprocessed positions; empty for pooled
  std::vector<int> classes; // argmax per label
  int processed = 0;
};

// Inference-only forward pass: builds a throwaway graph and extracts values.
template <typename S>
Prediction<S> predict(const ModelConfig& cfg, const ParamStore<S>& ps,
                      const corpus::EncodedExample& ex) {
  Graph<S> g;
  ParamBinding<S> P(g, ps);
  ExampleGraph<S> eg = build_example(g, P, cfg, ex);

  Prediction<S> out;
  out.processed = eg.processed;
  out.logits = g.value(eg.logits);
  out.probabilities = Tensor<S>(out.logits.dims);
  autodiff::detail::masked_softmax_forward(out.logits, out.logits.cols(), out.probabilities);
  out.classes.resize(static_cast<std::size_t>(cfg.n_labels));
  for (int l = 0; l < cfg.n_labels; ++l)
    out.classes[static_cast<std::size_t>(l)] = argmax_row(out.logits, l);
  if (cfg.has_attention()) {
    const Tensor<S>& a = g.value(eg.alpha);
    out.alpha = Tensor<S>::zeros({a.rows(), cfg.n_tok});
    out.alpha.mat().leftCols(a.cols()) = a.mat();
  }
  return out;
}

// Gold-vs-predicted class vectors for a whole dataset under one model.
template <typename S>
std::vector<std::vector<int>> predict_classes(const ModelConfig& cfg, const ParamStore<S>& ps,
                                              const std::vector<corpus::EncodedExample>& examples) {
  std::vector<std::vector<int>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(predict(cfg, ps, ex).classes);
  return out;
}

}  // namespace relabel::model
