#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "relabel/embed_pretrain.hpp"
#include "relabel/errors.hpp"
#include "relabel/rng.hpp"

using namespace relabel;
using namespace relabel::pretrain;

namespace {

// Two topic clusters that never co-occur: vectors inside a cluster should
// end up closer than vectors across clusters.
std::vector<std::vector<std::string>> cluster_docs(int copies, std::uint64_t seed) {
  const std::vector<std::vector<std::string>> a = {
      {"brain", "scan", "shows", "infarct", "territory"},
      {"infarct", "territory", "brain", "shows", "scan"},
      {"scan", "brain", "infarct", "shows", "territory"}};
  const std::vector<std::vector<std::string>> b = {
      {"ticket", "train", "station", "platform", "depart"},
      {"platform", "depart", "ticket", "station", "train"},
      {"station", "ticket", "train", "depart", "platform"}};
  std::vector<std::vector<std::string>> docs;
  Rng rng(seed);
  for (int i = 0; i < copies; ++i) {
    docs.push_back(a[static_cast<std::size_t>(rng.uniform_int(3))]);
    docs.push_back(b[static_cast<std::size_t>(rng.uniform_int(3))]);
  }
  return docs;
}

double cosine(const encoders::EmbeddingFile& f, const std::string& x, const std::string& y) {
  int xi = -1, yi = -1;
  for (std::size_t i = 0; i < f.tokens.size(); ++i) {
    if (f.tokens[i] == x) xi = static_cast<int>(i);
    if (f.tokens[i] == y) yi = static_cast<int>(i);
  }
  REQUIRE(xi >= 0);
  REQUIRE(yi >= 0);
  double dot = 0, nx = 0, ny = 0;
  for (int j = 0; j < f.vectors.cols(); ++j) {
    const double a = f.vectors.at(xi, j), b = f.vectors.at(yi, j);
    dot += a * b;
    nx += a * a;
    ny += b * b;
  }
  return dot / (std::sqrt(nx) * std::sqrt(ny));
}

}  // namespace

TEST_CASE("pretraining output shape and determinism") {
  PretrainConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 2;
  cfg.min_count = 1;
  cfg.seed = 4;
  const auto docs = cluster_docs(10, 1);
  const auto a = skipgram_train(docs, cfg);
  const auto b = skipgram_train(docs, cfg);
  CHECK(a.tokens.size() == 10);  // 10 distinct words
  CHECK(a.vectors.rows() == 10);
  CHECK(a.vectors.cols() == 8);
  CHECK(a.vectors.all_finite());
  REQUIRE(a.tokens == b.tokens);
  for (Eigen::Index i = 0; i < a.vectors.v.size(); ++i)
    CHECK(a.vectors.v(i) == b.vectors.v(i));  // bitwise

  PretrainConfig other = cfg;
  other.seed = 5;
  const auto c = skipgram_train(docs, other);
  bool any_diff = false;
  for (Eigen::Index i = 0; i < a.vectors.v.size() && !any_diff; ++i)
    any_diff = a.vectors.v(i) != c.vectors.v(i);
  CHECK(any_diff);
}

TEST_CASE("zero epochs return the seeded initialization untouched") {
  PretrainConfig cfg;
  cfg.dim = 6;
  cfg.epochs = 0;
  cfg.min_count = 1;
  cfg.seed = 9;
  const auto f = skipgram_train(cluster_docs(3, 2), cfg);
  // Uniform(-0.5/dim, 0.5/dim) bounds hold for every entry.
  const double bound = 0.5 / 6.0;
  for (Eigen::Index i = 0; i < f.vectors.v.size(); ++i) {
    CHECK(f.vectors.v(i) <= bound);
    CHECK(f.vectors.v(i) >= -bound);
  }
}

TEST_CASE("tokens inside a topic cluster end up closer than across") {
  int wins = 0;
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    PretrainConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 40;
    cfg.window = 2;
    cfg.min_count = 1;
    cfg.seed = seed;
    const auto f = skipgram_train(cluster_docs(25, seed), cfg);
    const double within =
        cosine(f, "brain", "infarct") + cosine(f, "ticket", "platform");
    const double across =
        cosine(f, "brain", "ticket") + cosine(f, "infarct", "platform");
    if (within > across) ++wins;
  }
  CHECK(wins >= 4);
}

TEST_CASE("frequency cutoff can empty the vocabulary") {
  PretrainConfig cfg;
  cfg.min_count = 100;
  CHECK_THROWS_AS(skipgram_train(cluster_docs(2, 1), cfg), data_error);
}

TEST_CASE("min_count filters rare words from the table") {
  PretrainConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 1;
  cfg.min_count = 3;
  cfg.seed = 2;
  auto docs = cluster_docs(5, 3);
  docs.push_back({"rareword", "brain"});
  const auto f = skipgram_train(docs, cfg);
  for (const auto& t : f.tokens) CHECK(t != "rareword");
}
