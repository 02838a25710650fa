#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relabel/errors.hpp"
#include "relabel/tensor.hpp"

namespace relabel::autodiff {

// Named trainable tensors. Insertion order is the canonical parameter order:
// initialization, optimizer updates and checkpoints all walk it, so a given
// (config, seed) pair yields bitwise-identical parameters.
template <typename Scalar>
class ParamStore {
 public:
  Tensor<Scalar>& create(const std::string& name, Dims dims) {
    if (values_.count(name)) throw error("duplicate parameter: " + name);
    order_.push_back(name);
    auto [it, ok] = values_.emplace(name, Tensor<Scalar>(std::move(dims)));
    (void)ok;
    return it->second;
  }

  Tensor<Scalar>& at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw error("unknown parameter: " + name);
    return it->second;
  }
  const Tensor<Scalar>& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw error("unknown parameter: " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return values_.count(name) != 0; }
  const std::vector<std::string>& names() const { return order_; }

  Tensor<Scalar>& grad(const std::string& name) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
      auto [jt, ok] = grads_.emplace(name, Tensor<Scalar>::zeros(at(name).dims));
      (void)ok;
      return jt->second;
    }
    return it->second;
  }

  void zero_grads() {
    for (const auto& name : order_) grad(name).v.setZero();
  }

 private:
  std::vector<std::string> order_;
  std::unordered_map<std::string, Tensor<Scalar>> values_;
  std::unordered_map<std::string, Tensor<Scalar>> grads_;
};

template <typename Scalar>
class Graph;

// Lightweight handle to a node of one graph.
template <typename Scalar>
struct Var {
  Graph<Scalar>* g = nullptr;
  int idx = -1;

  bool valid() const { return g != nullptr && idx >= 0; }
};

// Define-by-run computation graph. Nodes are recorded in creation order,
// which is a topological order; backward walks it reversed. A graph is built
// per batch and discarded.
template <typename Scalar>
class Graph {
 public:
  struct Node {
    Tensor<Scalar> value;
    Tensor<Scalar> grad;
    std::vector<int> parents;
    std::function<void(Graph&, Node&)> backprop;
    std::string param_name;  // non-empty for parameter leaves
    const char* op = "";
    bool requires_grad = false;
  };

  Graph() { nodes_.reserve(256); }
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  Node& node(int i) { return *nodes_[static_cast<std::size_t>(i)]; }

  const Tensor<Scalar>& value(Var<Scalar> x) { return node(x.idx).value; }
  const Tensor<Scalar>& grad(Var<Scalar> x) { return node(x.idx).grad; }

  Var<Scalar> constant(Tensor<Scalar> t) {
    return emplace("constant", std::move(t), {}, nullptr, false);
  }

  // Parameter leaf: value copied from the store, gradient accumulated under
  // the same name by collect_param_grads().
  Var<Scalar> param(const std::string& name, const ParamStore<Scalar>& store) {
    Var<Scalar> x = emplace("param", store.at(name), {}, nullptr, true);
    node(x.idx).param_name = name;
    return x;
  }

  // Records one op. The backprop callback reads n.grad and accumulates into
  // parent grads; null for leaves.
  Var<Scalar> emplace(const char* op, Tensor<Scalar> value, std::vector<int> parents,
                      std::function<void(Graph&, Node&)> backprop, bool force_requires = false) {
    if (!value.all_finite())
      throw numeric_error(std::string("non-finite values produced by op '") + op + "'");
    auto n = std::make_unique<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
    n->op = op;
    n->requires_grad = force_requires;
    for (int p : n->parents)
      if (node(p).requires_grad) n->requires_grad = true;
    nodes_.push_back(std::move(n));
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  // Reverse-mode sweep from a scalar loss. Gradients of parameters not
  // reachable from the loss stay zero. A graph can only be consumed once.
  void run_backward(Var<Scalar> loss) {
    if (loss.g != this) throw error("loss belongs to a different graph");
    if (consumed_) throw error("graph already consumed by backward; build a fresh graph");
    Node& ln = node(loss.idx);
    if (ln.value.size() != 1) throw shape_error("backward requires a scalar loss node");
    consumed_ = true;
    for (auto& n : nodes_) n->grad = Tensor<Scalar>::zeros(n->value.dims);
    ln.grad.v(0) = Scalar(1);
    for (int i = loss.idx; i >= 0; --i) {
      Node& n = node(i);
      if (!n.requires_grad || !n.backprop) continue;
      n.backprop(*this, n);
    }
  }

  // Adds each parameter leaf's gradient into the store. Several leaves may
  // share a name only if bound once and reused, which param() guarantees per
  // call site; accumulation is in creation order either way.
  void collect_param_grads(ParamStore<Scalar>& store) {
    for (auto& n : nodes_)
      if (!n->param_name.empty() && n->grad.size() > 0)
        store.grad(n->param_name).v += n->grad.v;
  }

  bool consumed() const { return consumed_; }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
  bool consumed_ = false;
};

template <typename Scalar>
void backward(Graph<Scalar>& g, Var<Scalar> loss) {
  g.run_backward(loss);
}

// Binds parameters into a graph on first use and hands back the same node on
// every later request, so one batch graph holds exactly one leaf per
// parameter no matter how many examples reference it.
template <typename Scalar>
class ParamBinding {
 public:
  ParamBinding(Graph<Scalar>& g, const ParamStore<Scalar>& store) : g_(&g), store_(&store) {}

  Var<Scalar> operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    Var<Scalar> v = g_->param(name, *store_);
    bound_.emplace(name, v);
    return v;
  }

 private:
  Graph<Scalar>* g_;
  const ParamStore<Scalar>* store_;
  std::unordered_map<std::string, Var<Scalar>> bound_;
};

namespace detail {

template <typename Scalar>
void check_same_graph(Var<Scalar> a, Var<Scalar> b) {
  if (a.g != b.g) throw error("operands belong to different graphs");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operation catalog. Each op is a free function Var -> Var; forward values
// match the mathematical definition, backward accumulates exact analytic
// gradients. Matrix products are evaluated row-by-row so an output row
// depends only on its own inputs; this keeps results identical across code
// paths that compute the same row (see the tied-head equivalence tests).
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_graph(a, b);
  Graph<Scalar>& g = *a.g;
  const Tensor<Scalar>& A = g.value(a);
  const Tensor<Scalar>& B = g.value(b);
  if (A.rank() > 2 || B.rank() > 2 || A.cols() != B.rows())
    throw shape_error("matmul shape mismatch: " + dims_to_string(A.dims) + " * " +
                      dims_to_string(B.dims));
  Tensor<Scalar> out({A.rows(), B.cols()});
  for (int i = 0; i < A.rows(); ++i)
    out.mat().row(i).noalias() = A.mat().row(i) * B.mat();
  const int ai = a.idx, bi = b.idx;
  return g.emplace("matmul", std::move(out), {ai, bi},
                   [ai, bi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& An = gg.node(ai);
                     auto& Bn = gg.node(bi);
                     const auto Am = An.value.mat();
                     const auto Bm = Bn.value.mat();
                     const auto Gm = n.grad.mat();
                     for (int i = 0; i < Am.rows(); ++i) {
                       An.grad.mat().row(i).noalias() += Gm.row(i) * Bm.transpose();
                       Bn.grad.mat().noalias() += Am.row(i).transpose() * Gm.row(i);
                     }
                   });
}

// add supports equal shapes, a bias vector broadcast over the rows of a
// matrix, and a {1} scalar broadcast over everything.
template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_graph(a, b);
  Graph<Scalar>& g = *a.g;
  const Tensor<Scalar>& A = g.value(a);
  const Tensor<Scalar>& B = g.value(b);
  Tensor<Scalar> out = A;
  enum class Mode { same, bias, scalar };
  Mode mode;
  if (A.same_shape(B)) {
    mode = Mode::same;
    out.v += B.v;
  } else if (B.size() == 1) {
    mode = Mode::scalar;
    out.v += B.v(0);
  } else if (A.rank() == 2 && B.rank() == 1 && B.dims[0] == A.cols()) {
    mode = Mode::bias;
    out.mat().rowwise() += B.mat().row(0);
  } else {
    throw shape_error("add shape mismatch: " + dims_to_string(A.dims) + " + " +
                      dims_to_string(B.dims));
  }
  const int ai = a.idx, bi = b.idx;
  return g.emplace("add", std::move(out), {ai, bi},
                   [ai, bi, mode](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& An = gg.node(ai);
                     auto& Bn = gg.node(bi);
                     An.grad.v += n.grad.v;
                     switch (mode) {
                       case Mode::same:
                         Bn.grad.v += n.grad.v;
                         break;
                       case Mode::scalar:
                         Bn.grad.v(0) += n.grad.v.sum();
                         break;
                       case Mode::bias:
                         for (int i = 0; i < n.grad.rows(); ++i)
                           Bn.grad.mat().row(0) += n.grad.mat().row(i);
                         break;
                     }
                   });
}

// Elementwise product of equal shapes.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::check_same_graph(a, b);
  Graph<Scalar>& g = *a.g;
  const Tensor<Scalar>& A = g.value(a);
  const Tensor<Scalar>& B = g.value(b);
  if (!A.same_shape(B))
    throw shape_error("mul shape mismatch: " + dims_to_string(A.dims) + " vs " +
                      dims_to_string(B.dims));
  Tensor<Scalar> out = A;
  out.v *= B.v;
  const int ai = a.idx, bi = b.idx;
  return g.emplace("mul", std::move(out), {ai, bi},
                   [ai, bi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& An = gg.node(ai);
                     auto& Bn = gg.node(bi);
                     An.grad.v += n.grad.v * Bn.value.v;
                     Bn.grad.v += n.grad.v * An.value.v;
                   });
}

namespace detail {

template <typename Scalar, typename Fwd, typename Bwd>
Var<Scalar> elementwise(const char* op, Var<Scalar> x, Fwd fwd, Bwd bwd_from_out) {
  Graph<Scalar>& g = *x.g;
  Tensor<Scalar> out = g.value(x);
  fwd(out.v);
  const int xi = x.idx;
  return g.emplace(op, std::move(out), {xi},
                   [xi, bwd_from_out](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     bwd_from_out(gg.node(xi), n);
                   });
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> vtanh(Var<Scalar> x) {
  return detail::elementwise<Scalar>(
      "tanh", x, [](FlatArray<Scalar>& v) { v = v.tanh(); },
      [](typename Graph<Scalar>::Node& xn, typename Graph<Scalar>::Node& n) {
        xn.grad.v += n.grad.v * (Scalar(1) - n.value.v.square());
      });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> x) {
  return detail::elementwise<Scalar>(
      "sigmoid", x,
      [](FlatArray<Scalar>& v) { v = Scalar(1) / (Scalar(1) + (-v).exp()); },
      [](typename Graph<Scalar>::Node& xn, typename Graph<Scalar>::Node& n) {
        xn.grad.v += n.grad.v * n.value.v * (Scalar(1) - n.value.v);
      });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  return detail::elementwise<Scalar>(
      "relu", x, [](FlatArray<Scalar>& v) { v = v.max(Scalar(0)); },
      [](typename Graph<Scalar>::Node& xn, typename Graph<Scalar>::Node& n) {
        xn.grad.v += n.grad.v * (xn.value.v > Scalar(0)).template cast<Scalar>();
      });
}

template <typename Scalar>
Var<Scalar> vlog(Var<Scalar> x) {
  Graph<Scalar>& g = *x.g;
  Tensor<Scalar> out = g.value(x);
  out.v = out.v.log();
  const int xi = x.idx;
  return g.emplace("log", std::move(out), {xi},
                   [xi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& xn = gg.node(xi);
                     xn.grad.v += n.grad.v / xn.value.v;
                   });
}

// Sum of scalar-weighted tensors of one shape: sum_i coefs[i] * xs[i].
template <typename Scalar>
Var<Scalar> weighted_sum(const std::vector<Var<Scalar>>& xs, const std::vector<double>& coefs) {
  if (xs.empty() || xs.size() != coefs.size())
    throw shape_error("weighted_sum needs matching non-empty term and coefficient lists");
  Graph<Scalar>& g = *xs[0].g;
  Tensor<Scalar> out = Tensor<Scalar>::zeros(g.value(xs[0]).dims);
  std::vector<int> parents;
  parents.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    detail::check_same_graph(xs[0], xs[i]);
    const Tensor<Scalar>& X = g.value(xs[i]);
    if (!X.same_shape(out)) throw shape_error("weighted_sum terms must share one shape");
    out.v += static_cast<Scalar>(coefs[i]) * X.v;
    parents.push_back(xs[i].idx);
  }
  auto cs = coefs;
  return g.emplace("weighted_sum", std::move(out), std::move(parents),
                   [cs](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     for (std::size_t i = 0; i < n.parents.size(); ++i)
                       gg.node(n.parents[i]).grad.v += static_cast<Scalar>(cs[i]) * n.grad.v;
                   });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  return weighted_sum<Scalar>({a, b}, {1.0, -1.0});
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, double c) {
  return weighted_sum<Scalar>({x}, {c});
}

template <typename Scalar>
Var<Scalar> sum_all(Var<Scalar> x) {
  Graph<Scalar>& g = *x.g;
  Tensor<Scalar> out = Tensor<Scalar>::scalar(g.value(x).v.sum());
  const int xi = x.idx;
  return g.emplace("sum_all", std::move(out), {xi},
                   [xi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     gg.node(xi).grad.v += n.grad.v(0);
                   });
}

// Concatenation along the last axis (columns).
template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& xs) {
  if (xs.empty()) throw shape_error("concat_cols of nothing");
  Graph<Scalar>& g = *xs[0].g;
  const int rows = g.value(xs[0]).rows();
  int total = 0;
  std::vector<int> parents, widths;
  for (Var<Scalar> x : xs) {
    detail::check_same_graph(xs[0], x);
    const Tensor<Scalar>& X = g.value(x);
    if (X.rows() != rows) throw shape_error("concat_cols row mismatch");
    widths.push_back(X.cols());
    total += X.cols();
    parents.push_back(x.idx);
  }
  Tensor<Scalar> out({rows, total});
  int off = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.mat().middleCols(off, widths[i]) = g.value(xs[i]).mat();
    off += widths[i];
  }
  return g.emplace("concat", std::move(out), std::move(parents),
                   [widths](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     int o = 0;
                     for (std::size_t i = 0; i < n.parents.size(); ++i) {
                       auto& pn = gg.node(n.parents[i]);
                       pn.grad.mat() += n.grad.mat().middleCols(o, widths[i]);
                       o += widths[i];
                     }
                   });
}

template <typename Scalar>
Var<Scalar> concat_cols(Var<Scalar> a, Var<Scalar> b) {
  return concat_cols<Scalar>({a, b});
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> x) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  Tensor<Scalar> out({X.cols(), X.rows()});
  out.mat() = X.mat().transpose();
  const int xi = x.idx;
  return g.emplace("transpose", std::move(out), {xi},
                   [xi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     gg.node(xi).grad.mat() += n.grad.mat().transpose();
                   });
}

template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> x, Dims dims) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (dim_count(dims) != X.size())
    throw shape_error("reshape size mismatch: " + dims_to_string(X.dims) + " -> " +
                      dims_to_string(dims));
  Tensor<Scalar> out = X;
  out.dims = dims;
  const int xi = x.idx;
  return g.emplace("reshape", std::move(out), {xi},
                   [xi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     gg.node(xi).grad.v += n.grad.v;
                   });
}

template <typename Scalar>
Var<Scalar> slice_rows(Var<Scalar> x, int start, int count) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (X.rank() != 2 || start < 0 || count < 1 || start + count > X.rows())
    throw shape_error("slice_rows out of range");
  Tensor<Scalar> out({count, X.cols()});
  out.mat() = X.mat().middleRows(start, count);
  const int xi = x.idx;
  return g.emplace("slice_rows", std::move(out), {xi},
                   [xi, start, count](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     gg.node(xi).grad.mat().middleRows(start, count) += n.grad.mat();
                   });
}

// Vertical stack of blocks with equal column counts.
template <typename Scalar>
Var<Scalar> stack_rows(const std::vector<Var<Scalar>>& xs) {
  if (xs.empty()) throw shape_error("stack_rows of nothing");
  Graph<Scalar>& g = *xs[0].g;
  const int cols = g.value(xs[0]).cols();
  int rows = 0;
  std::vector<int> parents, heights;
  for (Var<Scalar> x : xs) {
    detail::check_same_graph(xs[0], x);
    const Tensor<Scalar>& X = g.value(x);
    if (X.cols() != cols) throw shape_error("stack_rows column mismatch");
    heights.push_back(X.rows());
    rows += X.rows();
    parents.push_back(x.idx);
  }
  Tensor<Scalar> out({rows, cols});
  int off = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.mat().middleRows(off, heights[i]) = g.value(xs[i]).mat();
    off += heights[i];
  }
  return g.emplace("stack_rows", std::move(out), std::move(parents),
                   [heights](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     int o = 0;
                     for (std::size_t i = 0; i < n.parents.size(); ++i) {
                       gg.node(n.parents[i]).grad.mat() += n.grad.mat().middleRows(o, heights[i]);
                       o += heights[i];
                     }
                   });
}

template <typename Scalar>
Var<Scalar> repeat_rows(Var<Scalar> x, int times) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (X.rows() != 1 || times < 1) throw shape_error("repeat_rows wants a single row");
  Tensor<Scalar> out({times, X.cols()});
  for (int i = 0; i < times; ++i) out.mat().row(i) = X.mat().row(0);
  const int xi = x.idx;
  return g.emplace("repeat_rows", std::move(out), {xi},
                   [xi](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& xn = gg.node(xi);
                     for (int i = 0; i < n.grad.rows(); ++i)
                       xn.grad.mat().row(0) += n.grad.mat().row(i);
                   });
}

// Gathers table rows by token id. Ids are data, not graph values.
template <typename Scalar>
Var<Scalar> embedding_lookup(const std::vector<int>& ids, Var<Scalar> table) {
  Graph<Scalar>& g = *table.g;
  const Tensor<Scalar>& T = g.value(table);
  if (T.rank() != 2) throw shape_error("embedding table must be rank 2");
  Tensor<Scalar> out({static_cast<int>(ids.size()), T.cols()});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= T.rows()) throw shape_error("token id out of vocabulary range");
    out.mat().row(static_cast<int>(t)) = T.mat().row(ids[t]);
  }
  const int ti = table.idx;
  auto ids_copy = ids;
  return g.emplace("embedding_lookup", std::move(out), {ti},
                   [ti, ids_copy](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& tn = gg.node(ti);
                     for (std::size_t t = 0; t < ids_copy.size(); ++t)
                       tn.grad.mat().row(ids_copy[t]) += n.grad.mat().row(static_cast<int>(t));
                   });
}

// 1-D convolution over time with zero same-padding, preserving the time axis.
// x is [T x e], kernels are [k x e x m], bias is [m]; output is [T x m].
// For even k the padding is asymmetric: (k-1)/2 zeros before, k/2 after.
template <typename Scalar>
Var<Scalar> conv1d_same(Var<Scalar> x, Var<Scalar> kernels, Var<Scalar> bias) {
  detail::check_same_graph(x, kernels);
  detail::check_same_graph(x, bias);
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  const Tensor<Scalar>& K = g.value(kernels);
  const Tensor<Scalar>& B = g.value(bias);
  if (X.rank() != 2 || K.rank() != 3 || K.dims[1] != X.cols())
    throw shape_error("conv1d_same wants x[Txe], kernels[kxexm]");
  const int T = X.rows(), e = X.cols(), k = K.dims[0], m = K.dims[2];
  if (B.size() != m) throw shape_error("conv1d_same bias size mismatch");
  // T < k is fine: the zero padding just covers more of the window.
  const int pad_left = (k - 1) / 2;
  Tensor<Scalar> out({T, m});
  for (int t = 0; t < T; ++t) {
    out.mat().row(t) = B.mat().row(0);
    for (int j = 0; j < k; ++j) {
      const int s = t + j - pad_left;
      if (s < 0 || s >= T) continue;
      out.mat().row(t).noalias() += X.mat().row(s) * K.slab(static_cast<std::int64_t>(j) * e * m, e, m);
    }
  }
  const int xi = x.idx, ki = kernels.idx, bi = bias.idx;
  return g.emplace(
      "conv1d_same", std::move(out), {xi, ki, bi},
      [xi, ki, bi, T, e, k, m, pad_left](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
        auto& xn = gg.node(xi);
        auto& kn = gg.node(ki);
        auto& bn = gg.node(bi);
        for (int t = 0; t < T; ++t) {
          const auto go = n.grad.mat().row(t);
          bn.grad.mat().row(0) += go;
          for (int j = 0; j < k; ++j) {
            const int s = t + j - pad_left;
            if (s < 0 || s >= T) continue;
            const std::int64_t off = static_cast<std::int64_t>(j) * e * m;
            kn.grad.slab(off, e, m).noalias() += xn.value.mat().row(s).transpose() * go;
            xn.grad.mat().row(s).noalias() += go * kn.value.slab(off, e, m).transpose();
          }
        }
      });
}

// Column-wise max over the time axis: [T x h] -> [h]. Ties go to the
// earliest position.
template <typename Scalar>
Var<Scalar> max_over_time(Var<Scalar> x) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (X.rank() != 2 || X.rows() < 1) throw shape_error("max_over_time wants [Txh], T>=1");
  Tensor<Scalar> out({X.cols()});
  std::vector<int> arg(static_cast<std::size_t>(X.cols()), 0);
  for (int j = 0; j < X.cols(); ++j) {
    int best = 0;
    for (int t = 1; t < X.rows(); ++t)
      if (X.mat()(t, j) > X.mat()(best, j)) best = t;
    arg[static_cast<std::size_t>(j)] = best;
    out.v(j) = X.mat()(best, j);
  }
  const int xi = x.idx;
  return g.emplace("max_over_time", std::move(out), {xi},
                   [xi, arg](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& xn = gg.node(xi);
                     for (int j = 0; j < static_cast<int>(arg.size()); ++j)
                       xn.grad.mat()(arg[static_cast<std::size_t>(j)], j) += n.grad.v(j);
                   });
}

// Mean of the first nrows rows (all rows when nrows < 0): [T x h] -> [h].
template <typename Scalar>
Var<Scalar> mean_over_rows(Var<Scalar> x, int nrows = -1) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (X.rank() != 2) throw shape_error("mean_over_rows wants a rank-2 tensor");
  const int n = nrows < 0 ? X.rows() : nrows;
  if (n < 1 || n > X.rows()) throw shape_error("mean_over_rows row count out of range");
  Tensor<Scalar> out({X.cols()});
  for (int t = 0; t < n; ++t) out.v += X.mat().row(t).transpose().array();
  out.v /= static_cast<Scalar>(n);
  const int xi = x.idx;
  return g.emplace("mean_over_rows", std::move(out), {xi},
                   [xi, n](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n_) {
                     auto& xn = gg.node(xi);
                     const Scalar inv = Scalar(1) / static_cast<Scalar>(n);
                     for (int t = 0; t < n; ++t)
                       xn.grad.mat().row(t) += inv * n_.grad.mat().row(0);
                   });
}

namespace detail {

// Softmax over columns [0, valid) of each row, zero elsewhere, stabilized by
// row-max subtraction.
template <typename Scalar>
void masked_softmax_forward(const Tensor<Scalar>& X, int valid, Tensor<Scalar>& out) {
  for (int i = 0; i < X.rows(); ++i) {
    Scalar mx = X.mat()(i, 0);
    for (int j = 1; j < valid; ++j) mx = std::max(mx, X.mat()(i, j));
    Scalar z = Scalar(0);
    for (int j = 0; j < valid; ++j) {
      const Scalar ev = std::exp(X.mat()(i, j) - mx);
      out.mat()(i, j) = ev;
      z += ev;
    }
    for (int j = 0; j < valid; ++j) out.mat()(i, j) /= z;
    for (int j = valid; j < X.cols(); ++j) out.mat()(i, j) = Scalar(0);
  }
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> masked_softmax_rows(Var<Scalar> x, int valid) {
  Graph<Scalar>& g = *x.g;
  const Tensor<Scalar>& X = g.value(x);
  if (X.rank() != 2 || X.cols() < 1) throw shape_error("softmax_rows wants [rows x k], k>=1");
  if (valid < 1 || valid > X.cols()) throw shape_error("softmax mask length out of range");
  Tensor<Scalar> out(X.dims);
  detail::masked_softmax_forward(X, valid, out);
  const int xi = x.idx;
  return g.emplace("softmax_rows", std::move(out), {xi},
                   [xi, valid](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& xn = gg.node(xi);
                     for (int i = 0; i < n.value.rows(); ++i) {
                       Scalar dot = Scalar(0);
                       for (int j = 0; j < valid; ++j) dot += n.grad.mat()(i, j) * n.value.mat()(i, j);
                       for (int j = 0; j < valid; ++j)
                         xn.grad.mat()(i, j) += n.value.mat()(i, j) * (n.grad.mat()(i, j) - dot);
                     }
                   });
}

template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> x) {
  return masked_softmax_rows(x, x.g->value(x).cols());
}

// Per-row affine maps with independent parameters per row: for each l,
// out[l] = s[l] * W[l] + b[l], with s [nL x din], W [nL x din x dout],
// b [nL x dout]. This is the batched form of the per-label classifiers.
template <typename Scalar>
Var<Scalar> per_label_linear(Var<Scalar> s, Var<Scalar> w, Var<Scalar> b) {
  detail::check_same_graph(s, w);
  detail::check_same_graph(s, b);
  Graph<Scalar>& g = *s.g;
  const Tensor<Scalar>& S = g.value(s);
  const Tensor<Scalar>& W = g.value(w);
  const Tensor<Scalar>& B = g.value(b);
  if (S.rank() != 2 || W.rank() != 3 || B.rank() != 2 || W.dims[0] != S.rows() ||
      W.dims[1] != S.cols() || B.dims[0] != S.rows() || B.dims[1] != W.dims[2])
    throw shape_error("per_label_linear shape mismatch");
  const int nl = S.rows(), din = S.cols(), dout = W.dims[2];
  Tensor<Scalar> out({nl, dout});
  for (int l = 0; l < nl; ++l) {
    const std::int64_t off = static_cast<std::int64_t>(l) * din * dout;
    out.mat().row(l).noalias() = S.mat().row(l) * W.slab(off, din, dout);
    out.mat().row(l) += B.mat().row(l);
  }
  const int si = s.idx, wi = w.idx, bi = b.idx;
  return g.emplace("per_label_linear", std::move(out), {si, wi, bi},
                   [si, wi, bi, nl, din, dout](Graph<Scalar>& gg, typename Graph<Scalar>::Node& n) {
                     auto& sn = gg.node(si);
                     auto& wn = gg.node(wi);
                     auto& bn = gg.node(bi);
                     for (int l = 0; l < nl; ++l) {
                       const std::int64_t off = static_cast<std::int64_t>(l) * din * dout;
                       const auto go = n.grad.mat().row(l);
                       sn.grad.mat().row(l).noalias() += go * wn.value.slab(off, din, dout).transpose();
                       wn.grad.slab(off, din, dout).noalias() +=
                           sn.value.mat().row(l).transpose() * go;
                       bn.grad.mat().row(l) += go;
                     }
                   });
}

}  // namespace relabel::autodiff
