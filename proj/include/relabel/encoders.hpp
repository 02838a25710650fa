#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "relabel/corpus.hpp"
#include "relabel/errors.hpp"
#include "relabel/graph.hpp"
#include "relabel/rng.hpp"
#include "relabel/tensor.hpp"

namespace relabel::encoders {

using autodiff::Dims;
using autodiff::Graph;
using autodiff::ParamBinding;
using autodiff::ParamStore;
using autodiff::Tensor;
using autodiff::Var;

enum class EncoderKind { mean, caml, bigru };

EncoderKind encoder_kind_from_string(const std::string& s);
const std::string& encoder_kind_to_string(EncoderKind k);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::bigru;
  int n_tok = 50;
  int embed_dim = 200;  // e
  int hidden = 1024;    // h; per-direction GRU width and per-kernel conv maps are h/2
  // When set, pad positions are embedded and recurred over like real tokens
  // instead of being masked out.
  bool strict_parity = false;

  // Width of the token representation r consumed by attention heads.
  int repr_width() const { return kind == EncoderKind::mean ? embed_dim : hidden; }
};

inline constexpr int kConvWidths[2] = {2, 4};

// Creates and initializes the embedding table and encoder weights, in a
// fixed creation order so a seed fully determines every value. The pad row
// of the embedding table is zeroed (and the trainer keeps it frozen).
// Embeddings draw from uniform(-0.05, 0.05); recurrent and convolutional
// weights from uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at 0.
template <typename S>
void create_encoder_params(ParamStore<S>& ps, const EncoderConfig& cfg, int vocab_size, Rng& rng) {
  if (vocab_size < 2) throw error("encoder needs a vocabulary with the reserved entries");
  if (cfg.embed_dim < 1 || cfg.n_tok < 1) throw error("encoder dims must be positive");
  Tensor<S>& embed = ps.create("embed", {vocab_size, cfg.embed_dim});
  embed = Tensor<S>::uniform({vocab_size, cfg.embed_dim}, S(-0.05), S(0.05), rng);
  embed.mat().row(corpus::Vocabulary::kPad).setZero();

  const auto fan_init = [&](const std::string& name, Dims dims, int fan_in) {
    const S bound = S(1) / std::sqrt(static_cast<S>(fan_in));
    ps.create(name, dims) = Tensor<S>::uniform(dims, -bound, bound, rng);
  };

  switch (cfg.kind) {
    case EncoderKind::mean:
      break;
    case EncoderKind::caml: {
      if (cfg.hidden % 2 != 0) throw error("conv encoder needs an even hidden size");
      const int m = cfg.hidden / 2;
      for (int k : kConvWidths) {
        const std::string base = "conv" + std::to_string(k);
        fan_init(base + "_k", {k, cfg.embed_dim, m}, k * cfg.embed_dim);
        ps.create(base + "_b", {m});
      }
      break;
    }
    case EncoderKind::bigru: {
      if (cfg.hidden % 2 != 0) throw error("bidirectional encoder needs an even hidden size");
      const int d = cfg.hidden / 2;
      for (const char* dir : {"f", "b"}) {
        for (const char* gate : {"z", "g", "n"}) {
          const std::string base = std::string("gru_") + dir + "_";
          fan_init(base + "w" + gate, {cfg.embed_dim, d}, cfg.embed_dim);
          fan_init(base + "u" + gate, {d, d}, d);
          ps.create(base + "b" + gate, {d});
        }
      }
      break;
    }
  }
}

// Token ids the graph actually processes: the real prefix normally, the full
// padded sequence under strict parity.
inline std::vector<int> graph_token_ids(const corpus::EncodedExample& ex, const EncoderConfig& cfg) {
  if (ex.real_length < 1) throw data_error("cannot encode an empty sentence");
  if (static_cast<int>(ex.token_ids.size()) != cfg.n_tok)
    throw shape_error("example token length does not match n_tok");
  if (cfg.strict_parity) return ex.token_ids;
  return std::vector<int>(ex.token_ids.begin(), ex.token_ids.begin() + ex.real_length);
}

template <typename S>
Var<S> embed_sequence(Graph<S>& g, ParamBinding<S>& P, const corpus::EncodedExample& ex,
                      const EncoderConfig& cfg) {
  (void)g;
  return embedding_lookup(graph_token_ids(ex, cfg), P("embed"));
}

// One step of the gated recurrence:
//   z = sigmoid(x Wz + h Uz + bz)
//   gate = sigmoid(x Wg + h Ug + bg)
//   cand = tanh(x Wn + (gate * h) Un + bn)
//   h' = (1 - z) * h + z * cand
template <typename S>
Var<S> gru_cell(Graph<S>& g, Var<S> x, Var<S> h, ParamBinding<S>& P, const std::string& dir) {
  const std::string base = "gru_" + dir + "_";
  auto gate_pre = [&](const char* gate) {
    return add(add(matmul(x, P(base + "w" + gate)), matmul(h, P(base + "u" + gate))),
               P(base + "b" + gate));
  };
  Var<S> z = sigmoid(gate_pre("z"));
  Var<S> gate = sigmoid(gate_pre("g"));
  Var<S> cand = vtanh(add(add(matmul(x, P(base + "wn")), matmul(mul(gate, h), P(base + "un"))),
                          P(base + "bn")));
  (void)g;
  return add(sub(h, mul(z, h)), mul(z, cand));
}

// Bidirectional recurrence over the embedded sequence. Both directions start
// from zero state and carry their own weights; row t of the result is the
// forward state after consuming position t next to the backward state after
// consuming positions T-1..t.
template <typename S>
Var<S> bigru_repr(Graph<S>& g, ParamBinding<S>& P, Var<S> embedded, const EncoderConfig& cfg) {
  const int T = g.value(embedded).rows();
  const int d = cfg.hidden / 2;
  std::vector<Var<S>> fwd(static_cast<std::size_t>(T)), bwd(static_cast<std::size_t>(T));
  Var<S> h = g.constant(Tensor<S>::zeros({1, d}));
  for (int t = 0; t < T; ++t) {
    h = gru_cell(g, slice_rows(embedded, t, 1), h, P, "f");
    fwd[static_cast<std::size_t>(t)] = h;
  }
  h = g.constant(Tensor<S>::zeros({1, d}));
  for (int t = T - 1; t >= 0; --t) {
    h = gru_cell(g, slice_rows(embedded, t, 1), h, P, "b");
    bwd[static_cast<std::size_t>(t)] = h;
  }
  std::vector<Var<S>> rows;
  rows.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    rows.push_back(concat_cols(fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]));
  return stack_rows(rows);
}

// Parallel convolution groups with zero same-padding and tanh, concatenated
// per position.
template <typename S>
Var<S> caml_repr(Graph<S>& g, ParamBinding<S>& P, Var<S> embedded) {
  std::vector<Var<S>> groups;
  for (int k : kConvWidths) {
    const std::string base = "conv" + std::to_string(k);
    groups.push_back(vtanh(conv1d_same(embedded, P(base + "_k"), P(base + "_b"))));
  }
  (void)g;
  return concat_cols(groups);
}

// Token representation r for attention heads: [T x repr_width].
template <typename S>
Var<S> encoder_repr(Graph<S>& g, ParamBinding<S>& P, const corpus::EncodedExample& ex,
                    const EncoderConfig& cfg) {
  Var<S> embedded = embed_sequence(g, P, ex, cfg);
  switch (cfg.kind) {
    case EncoderKind::mean:
      return embedded;
    case EncoderKind::caml:
      return caml_repr(g, P, embedded);
    case EncoderKind::bigru:
      return bigru_repr(g, P, embedded, cfg);
  }
  throw error("unreachable encoder kind");
}

// Single-vector summary for the pooled head: the token-embedding mean for
// the mean encoder, max over time of the conv features for the conv encoder,
// and the mean over processed positions of r for the recurrent encoder.
template <typename S>
Var<S> encoder_pooled(Graph<S>& g, ParamBinding<S>& P, const corpus::EncodedExample& ex,
                      const EncoderConfig& cfg) {
  switch (cfg.kind) {
    case EncoderKind::mean:
      return mean_over_rows(embed_sequence(g, P, ex, cfg));
    case EncoderKind::caml:
      return max_over_time(caml_repr(g, P, embed_sequence(g, P, ex, cfg)));
    case EncoderKind::bigru:
      return mean_over_rows(encoder_repr(g, P, ex, cfg));
  }
  throw error("unreachable encoder kind");
}

// ---------------------------------------------------------------------------
// Pretrained-embedding text format: first line "|V| e", then one token and e
// reals per line.
// ---------------------------------------------------------------------------

struct EmbeddingFile {
  std::vector<std::string> tokens;
  Tensor<double> vectors;  // [tokens x e]
};

EmbeddingFile load_embedding_text(const std::string& path);
void save_embedding_text(const EmbeddingFile& f, const std::string& path);

// Copies vectors for tokens present in the vocabulary over the seeded random
// initialization; everything else (pad included) is left untouched. Returns
// how many vocabulary entries were covered.
template <typename S>
int apply_pretrained_embeddings(ParamStore<S>& ps, const corpus::Vocabulary& vocab,
                                const EmbeddingFile& f) {
  Tensor<S>& embed = ps.at("embed");
  if (f.vectors.cols() != embed.cols())
    throw data_error("pretrained embedding size does not match the configured embedding size");
  int covered = 0;
  for (std::size_t i = 0; i < f.tokens.size(); ++i) {
    const int id = vocab.id_of(f.tokens[i]);
    if (id == corpus::Vocabulary::kUnk && f.tokens[i] != "<unk>") continue;
    if (id == corpus::Vocabulary::kPad) continue;
    for (int j = 0; j < embed.cols(); ++j)
      embed.at(id, j) = static_cast<S>(f.vectors.at(static_cast<int>(i), j));
    ++covered;
  }
  return covered;
}

}  // namespace relabel::encoders
