#pragma once

#include <cmath>
#include <string>

#include "relabel/errors.hpp"
#include "relabel/graph.hpp"
#include "relabel/rng.hpp"
#include "relabel/tensor.hpp"

namespace relabel::heads {

using autodiff::Dims;
using autodiff::Graph;
using autodiff::ParamBinding;
using autodiff::ParamStore;
using autodiff::Tensor;
using autodiff::Var;

enum class HeadKind { pooled, single_attention, per_label_attention };

HeadKind head_kind_from_string(const std::string& s);
const std::string& head_kind_to_string(HeadKind k);

inline constexpr int kDeepWidths[2] = {512, 256};

struct HeadConfig {
  HeadKind kind = HeadKind::per_label_attention;
  bool deep = false;  // three-layer per-label classifiers instead of one linear map
  int n_labels = 0;
  int n_classes = 4;
  int width = 0;  // input width: repr_width for attention heads, pooled width otherwise
};

// Creates and initializes head parameters. Weights draw from
// uniform(-1/sqrt(width), 1/sqrt(width)); biases start at zero. Creation
// order is fixed: attention transform, scoring vectors, classifier stack.
template <typename S>
void create_head_params(ParamStore<S>& ps, const HeadConfig& cfg, Rng& rng) {
  if (cfg.n_labels < 1 || cfg.n_classes < 2 || cfg.width < 1)
    throw error("head configuration has non-positive sizes");
  const S bound = S(1) / std::sqrt(static_cast<S>(cfg.width));
  const auto init = [&](const std::string& name, Dims dims) {
    ps.create(name, dims) = Tensor<S>::uniform(dims, -bound, bound, rng);
  };
  if (cfg.kind == HeadKind::pooled) {
    if (cfg.deep) throw error("the deep classifier applies to attention heads only");
    init("pool_w", {cfg.width, cfg.n_labels * cfg.n_classes});
    ps.create("pool_b", {cfg.n_labels * cfg.n_classes});
    return;
  }
  init("att_w0", {cfg.width, cfg.width});
  ps.create("att_b0", {cfg.width});
  init("att_v", {cfg.kind == HeadKind::per_label_attention ? cfg.n_labels : 1, cfg.width});
  if (!cfg.deep) {
    init("cls_w", {cfg.n_labels, cfg.width, cfg.n_classes});
    ps.create("cls_b", {cfg.n_labels, cfg.n_classes});
  } else {
    init("cls_w1", {cfg.n_labels, cfg.width, kDeepWidths[0]});
    ps.create("cls_b1", {cfg.n_labels, kDeepWidths[0]});
    init("cls_w2", {cfg.n_labels, kDeepWidths[0], kDeepWidths[1]});
    ps.create("cls_b2", {cfg.n_labels, kDeepWidths[1]});
    init("cls_w3", {cfg.n_labels, kDeepWidths[1], cfg.n_classes});
    ps.create("cls_b3", {cfg.n_labels, cfg.n_classes});
  }
}

// The per-label classifier stack applied to one attended vector per label
// (rows of s): either a single affine map per label or the deeper
// width -> 512 -> 256 -> n_classes chain with rectified-linear activations
// between layers and none on the output.
template <typename S>
Var<S> label_classifiers(ParamBinding<S>& P, Var<S> s, const HeadConfig& cfg) {
  if (!cfg.deep) return per_label_linear(s, P("cls_w"), P("cls_b"));
  Var<S> h1 = relu(per_label_linear(s, P("cls_w1"), P("cls_b1")));
  Var<S> h2 = relu(per_label_linear(h1, P("cls_w2"), P("cls_b2")));
  return per_label_linear(h2, P("cls_w3"), P("cls_b3"));
}

template <typename S>
struct AttentionOut {
  Var<S> logits;  // [n_labels x n_classes]
  Var<S> alpha;   // [n_labels x T] per-label, [1 x T] single
};

// Shared attention computation:
//   u_t = tanh(W0 r_t + b0)
//   alpha = row softmax of v u^T      (one v row per label, or one shared row)
//   s = alpha r                       (one attended vector per row of v)
// then the per-label classifiers on s, with the single attended vector
// repeated across labels in single mode. Per-row kernels keep the tied
// per-label head bitwise identical to the single head.
template <typename S>
AttentionOut<S> attention_head(Graph<S>& g, ParamBinding<S>& P, Var<S> r, const HeadConfig& cfg) {
  const Tensor<S>& R = g.value(r);
  if (R.cols() != cfg.width) throw shape_error("token representation width does not match the head");
  Var<S> u = vtanh(add(matmul(r, P("att_w0")), P("att_b0")));
  Var<S> alpha = softmax_rows(matmul(P("att_v"), transpose(u)));
  Var<S> s = matmul(alpha, r);
  Var<S> stacked =
      cfg.kind == HeadKind::single_attention ? repeat_rows(s, cfg.n_labels) : s;
  return {label_classifiers(P, stacked, cfg), alpha};
}

// Pooled head: one affine map from the pooled vector to n_labels x n_classes
// logits.
template <typename S>
Var<S> pooled_head(Graph<S>& g, ParamBinding<S>& P, Var<S> pooled, const HeadConfig& cfg) {
  const Tensor<S>& X = g.value(pooled);
  if (X.size() != cfg.width) throw shape_error("pooled vector width does not match the head");
  Var<S> flat = add(matmul(pooled, P("pool_w")), P("pool_b"));
  return reshape(flat, {cfg.n_labels, cfg.n_classes});
}

}  // namespace relabel::heads
