#include <doctest.h>

#include <cmath>
#include <vector>

#include "relabel/errors.hpp"
#include "relabel/grad_check.hpp"
#include "relabel/heads.hpp"

using namespace relabel;
using namespace relabel::autodiff;
using namespace relabel::heads;

namespace {

HeadConfig attention_cfg(HeadKind kind, int n_labels, int width, bool deep = false) {
  HeadConfig c;
  c.kind = kind;
  c.deep = deep;
  c.n_labels = n_labels;
  c.n_classes = 4;
  c.width = width;
  return c;
}

}  // namespace

TEST_CASE("attention worked example: identity transform, axis scorer") {
  // r = [[1,0],[0,1]], W0 = I, b0 = 0, v = (1,0):
  //   u = tanh(r), scores = (tanh 1, 0), alpha = softmax(tanh 1, 0).
  HeadConfig cfg = attention_cfg(HeadKind::single_attention, 2, 2);
  ParamStore<double> ps;
  ps.create("att_w0", {2, 2}) = Tensor<double>::from({2, 2}, {1, 0, 0, 1});
  ps.create("att_b0", {2});
  ps.create("att_v", {1, 2}) = Tensor<double>::from({1, 2}, {1, 0});
  ps.create("cls_w", {2, 2, 4});
  ps.create("cls_b", {2, 4});

  Graph<double> g;
  ParamBinding<double> P(g, ps);
  auto r = g.constant(Tensor<double>::from({2, 2}, {1, 0, 0, 1}));
  const auto out = attention_head(g, P, r, cfg);

  const double t1 = std::tanh(1.0);
  const double a0 = std::exp(t1) / (std::exp(t1) + 1.0);
  CHECK(g.value(out.alpha).at(0, 0) == doctest::Approx(a0).epsilon(1e-12));
  CHECK(g.value(out.alpha).at(0, 1) == doctest::Approx(1.0 - a0).epsilon(1e-12));
  // Published four-digit values of the same quantity.
  CHECK(g.value(out.alpha).at(0, 0) == doctest::Approx(0.6814).epsilon(1e-3));
  CHECK(g.value(out.alpha).at(0, 1) == doctest::Approx(0.3186).epsilon(1e-3));
  // s = alpha r with r the identity is alpha itself.
  CHECK(g.value(out.logits).rows() == 2);
  CHECK(g.value(out.logits).cols() == 4);
}

TEST_CASE("zero scoring vector gives uniform attention") {
  HeadConfig cfg = attention_cfg(HeadKind::per_label_attention, 3, 4);
  ParamStore<double> ps;
  Rng rng(5);
  create_head_params(ps, cfg, rng);
  ps.at("att_v") = Tensor<double>::zeros({3, 4});

  Graph<double> g;
  ParamBinding<double> P(g, ps);
  Rng drng(6);
  auto r = g.constant(Tensor<double>::uniform({5, 4}, -1, 1, drng));
  const auto out = attention_head(g, P, r, cfg);
  for (int l = 0; l < 3; ++l)
    for (int t = 0; t < 5; ++t)
      CHECK(g.value(out.alpha).at(l, t) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("alpha rows always normalize; identical v rows collapse to one pattern") {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    HeadConfig cfg = attention_cfg(HeadKind::per_label_attention, 4, 3);
    ParamStore<double> ps;
    Rng prng(1000 + static_cast<std::uint64_t>(trial));
    create_head_params(ps, cfg, prng);
    // Tie all v rows to the first.
    for (int l = 1; l < 4; ++l)
      for (int j = 0; j < 3; ++j) ps.at("att_v").at(l, j) = ps.at("att_v").at(0, j);

    Graph<double> g;
    ParamBinding<double> P(g, ps);
    const int T = 2 + rng.uniform_int(6);
    auto r = g.constant(Tensor<double>::uniform({T, 3}, -2, 2, rng));
    const auto out = attention_head(g, P, r, cfg);
    for (int l = 0; l < 4; ++l) {
      double sum = 0.0;
      for (int t = 0; t < T; ++t) sum += g.value(out.alpha).at(l, t);
      CHECK(std::abs(sum - 1.0) <= 1e-12);
      for (int t = 0; t < T; ++t)
        CHECK(g.value(out.alpha).at(l, t) == g.value(out.alpha).at(0, t));  // bitwise
    }
  }
}

TEST_CASE("tied per-label head is bitwise identical to the single head") {
  const int n_labels = 5, width = 4, T = 6;
  HeadConfig per = attention_cfg(HeadKind::per_label_attention, n_labels, width);
  HeadConfig single = attention_cfg(HeadKind::single_attention, n_labels, width);

  ParamStore<double> ps_single;
  Rng rng(321);
  create_head_params(ps_single, single, rng);

  // Tie: every label shares the single head's v row and classifier.
  ParamStore<double> ps_tied;
  ps_tied.create("att_w0", ps_single.at("att_w0").dims) = ps_single.at("att_w0");
  ps_tied.create("att_b0", ps_single.at("att_b0").dims) = ps_single.at("att_b0");
  auto& v = ps_tied.create("att_v", {n_labels, width});
  for (int l = 0; l < n_labels; ++l)
    for (int j = 0; j < width; ++j) v.at(l, j) = ps_single.at("att_v").at(0, j);
  ps_tied.create("cls_w", {n_labels, width, 4});
  ps_tied.create("cls_b", {n_labels, 4});
  for (int l = 0; l < n_labels; ++l)
    for (int i = 0; i < width; ++i)
      for (int c = 0; c < 4; ++c) {
        ps_tied.at("cls_w").v(static_cast<Eigen::Index>(l) * width * 4 + i * 4 + c) =
            ps_single.at("cls_w").v(static_cast<Eigen::Index>(l) * width * 4 + i * 4 + c);
        ps_tied.at("cls_b").at(l, c) = ps_single.at("cls_b").at(l, c);
      }

  Rng drng(55);
  for (int trial = 0; trial < 20; ++trial) {
    auto R = Tensor<double>::uniform({T, width}, -1.5, 1.5, drng);
    Graph<double> ga, gb;
    ParamBinding<double> Pa(ga, ps_tied), Pb(gb, ps_single);
    const auto a = attention_head(ga, Pa, ga.constant(R), per);
    const auto b = attention_head(gb, Pb, gb.constant(R), single);
    REQUIRE(ga.value(a.logits).dims == gb.value(b.logits).dims);
    for (Eigen::Index i = 0; i < ga.value(a.logits).v.size(); ++i)
      CHECK(ga.value(a.logits).v(i) == gb.value(b.logits).v(i));  // bitwise
  }
}

TEST_CASE("pooled head slices its bias by label") {
  HeadConfig cfg;
  cfg.kind = HeadKind::pooled;
  cfg.n_labels = 3;
  cfg.n_classes = 4;
  cfg.width = 5;
  ParamStore<double> ps;
  Rng rng(9);
  create_head_params(ps, cfg, rng);
  ps.at("pool_w") = Tensor<double>::zeros({5, 12});
  for (int i = 0; i < 12; ++i) ps.at("pool_b").v(i) = i * 0.5;

  Graph<double> g;
  ParamBinding<double> P(g, ps);
  auto pooled = g.constant(Tensor<double>::from({1, 5}, {1, 2, 3, 4, 5}));
  auto logits = pooled_head(g, P, pooled, cfg);
  REQUIRE(g.value(logits).rows() == 3);
  for (int l = 0; l < 3; ++l)
    for (int c = 0; c < 4; ++c)
      CHECK(g.value(logits).at(l, c) == doctest::Approx((l * 4 + c) * 0.5).epsilon(1e-15));
}

TEST_CASE("deep classifier stack matches a hand-rolled forward pass") {
  const int n_labels = 2, width = 3;
  HeadConfig cfg = attention_cfg(HeadKind::per_label_attention, n_labels, width, true);
  ParamStore<double> ps;
  Rng rng(14);
  create_head_params(ps, cfg, rng);
  REQUIRE(ps.at("cls_w1").dims == (Dims{2, 3, 512}));
  REQUIRE(ps.at("cls_w2").dims == (Dims{2, 512, 256}));
  REQUIRE(ps.at("cls_w3").dims == (Dims{2, 256, 4}));

  Rng drng(3);
  auto S = Tensor<double>::uniform({n_labels, width}, -1, 1, drng);
  Graph<double> g;
  ParamBinding<double> P(g, ps);
  auto logits = label_classifiers(P, g.constant(S), cfg);

  for (int l = 0; l < n_labels; ++l) {
    std::vector<double> h1(512), h2(256);
    for (int j = 0; j < 512; ++j) {
      double s = ps.at("cls_b1").at(l, j);
      for (int i = 0; i < width; ++i)
        s += S.at(l, i) * ps.at("cls_w1").v(static_cast<Eigen::Index>(l) * width * 512 + i * 512 + j);
      h1[static_cast<std::size_t>(j)] = std::max(0.0, s);
    }
    for (int j = 0; j < 256; ++j) {
      double s = ps.at("cls_b2").at(l, j);
      for (int i = 0; i < 512; ++i)
        s += h1[static_cast<std::size_t>(i)] *
             ps.at("cls_w2").v(static_cast<Eigen::Index>(l) * 512 * 256 + i * 256 + j);
      h2[static_cast<std::size_t>(j)] = std::max(0.0, s);
    }
    for (int c = 0; c < 4; ++c) {
      double s = ps.at("cls_b3").at(l, c);
      for (int i = 0; i < 256; ++i)
        s += h2[static_cast<std::size_t>(i)] *
             ps.at("cls_w3").v(static_cast<Eigen::Index>(l) * 256 * 4 + i * 4 + c);
      CHECK(g.value(logits).at(l, c) == doctest::Approx(s).epsilon(1e-11));
    }
  }
}

TEST_CASE("head parameter shapes and configuration guards") {
  Rng rng(2);
  HeadConfig pooled;
  pooled.kind = HeadKind::pooled;
  pooled.n_labels = 4;
  pooled.width = 6;
  ParamStore<double> ps;
  create_head_params(ps, pooled, rng);
  CHECK(ps.at("pool_w").dims == (Dims{6, 16}));
  CHECK(ps.at("pool_b").dims == (Dims{16}));

  HeadConfig deep_pooled = pooled;
  deep_pooled.deep = true;
  ParamStore<double> ps2;
  CHECK_THROWS_AS(create_head_params(ps2, deep_pooled, rng), error);

  HeadConfig single = attention_cfg(HeadKind::single_attention, 4, 6);
  ParamStore<double> ps3;
  create_head_params(ps3, single, rng);
  CHECK(ps3.at("att_v").dims == (Dims{1, 6}));

  HeadConfig bad = attention_cfg(HeadKind::per_label_attention, 0, 6);
  ParamStore<double> ps4;
  CHECK_THROWS_AS(create_head_params(ps4, bad, rng), error);

  // Biases start at zero, weights within the stated bound.
  for (Eigen::Index i = 0; i < ps3.at("att_b0").v.size(); ++i) CHECK(ps3.at("att_b0").v(i) == 0.0);
  const double bound = 1.0 / std::sqrt(6.0);
  for (Eigen::Index i = 0; i < ps3.at("att_w0").v.size(); ++i) {
    CHECK(ps3.at("att_w0").v(i) <= bound);
    CHECK(ps3.at("att_w0").v(i) >= -bound);
  }
}

TEST_CASE("attention head gradients at small scale") {
  HeadConfig cfg = attention_cfg(HeadKind::per_label_attention, 2, 3);
  ParamStore<double> ps;
  Rng rng(8);
  create_head_params(ps, cfg, rng);
  Rng drng(12);
  const auto R = Tensor<double>::uniform({4, 3}, -1, 1, drng);
  const auto rep = grad_check<double>(
      ps,
      [&](Graph<double>& g, ParamStore<double>& s) {
        ParamBinding<double> P(g, s);
        const auto out = attention_head(g, P, g.constant(R), cfg);
        Rng crng(9);
        auto c = Tensor<double>::uniform(g.value(out.logits).dims, -1.0, 1.0, crng);
        return sum_all(mul(out.logits, g.constant(std::move(c))));
      },
      1e-5);
  CHECK(rep.deterministic);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("deep classifier backward reaches every layer") {
  // The deep widths are large enough that coordinate-wise finite differences
  // are out of the question; one analytic sweep has to do.
  HeadConfig cfg = attention_cfg(HeadKind::per_label_attention, 2, 3, true);
  ParamStore<double> ps;
  Rng rng(7);
  create_head_params(ps, cfg, rng);
  Rng drng(12);
  Graph<double> g;
  ParamBinding<double> P(g, ps);
  const auto out = attention_head(g, P, g.constant(Tensor<double>::uniform({4, 3}, -1, 1, drng)), cfg);
  auto loss = sum_all(mul(out.logits, out.logits));
  ps.zero_grads();
  backward(g, loss);
  g.collect_param_grads(ps);
  for (const auto& name : {"att_w0", "att_v", "cls_w1", "cls_w2", "cls_w3", "cls_b3"}) {
    const auto& gr = ps.grad(name);
    CHECK(gr.all_finite());
    double mass = 0.0;
    for (Eigen::Index i = 0; i < gr.v.size(); ++i) mass += std::abs(gr.v(i));
    INFO("param ", name);
    CHECK(mass > 0.0);
  }
}
