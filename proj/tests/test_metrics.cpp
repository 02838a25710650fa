#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "relabel/errors.hpp"
#include "relabel/metrics.hpp"
#include "relabel/rng.hpp"

using namespace relabel;
using namespace relabel::metrics;

namespace {

// Independent recount straight from the definition, one (label, class) cell
// at a time.
struct BruteCounts {
  long tp = 0, fp = 0, fn = 0;
};

BruteCounts brute(const std::vector<std::vector<int>>& preds,
                  const std::vector<std::vector<int>>& golds, int label,
                  const std::vector<int>& classes) {
  BruteCounts b;
  for (std::size_t i = 0; i < preds.size(); ++i)
    for (int cls : classes) {
      const bool p = preds[i][static_cast<std::size_t>(label)] == cls;
      const bool g = golds[i][static_cast<std::size_t>(label)] == cls;
      if (p && g) ++b.tp;
      if (p && !g) ++b.fp;
      if (!p && g) ++b.fn;
    }
  return b;
}

double f1_of(const BruteCounts& b) {
  const double denom = 2.0 * b.tp + b.fp + b.fn;
  return denom == 0.0 ? 0.0 : 2.0 * b.tp / denom;
}

}  // namespace

TEST_CASE("confusion counting by the definitions") {
  Confusion c(2);
  // label 0: gold positive, predicted positive -> TP(positive)
  // label 1: gold negative, predicted uncertain -> FN(negative) + FP(uncertain)
  c.add({3, 2}, {3, 1});
  CHECK(c.tp(0, 3) == 1);
  CHECK(c.fp(0, 3) == 0);
  CHECK(c.fn(1, 1) == 1);
  CHECK(c.fp(1, 2) == 1);
  CHECK(c.pair_count(1, 1, 2) == 1);

  // Both not mentioned: contributes nowhere, not even to pair counts.
  c.add({0, 0}, {0, 0});
  CHECK(c.pair_count(0, 0, 0) == 0);

  // gold not mentioned, predicted negative -> FP(negative) only
  c.add({1, 0}, {0, 0});
  CHECK(c.fp(0, 1) == 1);
  CHECK(c.fn(0, 1) == 0);

  CHECK_THROWS_AS(c.add({1}, {0, 0}), error);
  CHECK_THROWS_AS(c.add({9, 0}, {0, 0}), error);
}

TEST_CASE("pooled micro F1 on the worked 2/3 example") {
  // One TP, one FP, one FN pooled: F1 = 2*1 / (2*1 + 1 + 1) = 0.5; with two
  // TP instead: 4/(4+1+1) = 2/3.
  Confusion c(1);
  c.add({3}, {3});
  c.add({3}, {3});
  c.add({2}, {0});
  c.add({0}, {1});
  CHECK(f1_micro(c, all_mentioned_classes()) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("micro and macro equal a brute-force recount on random sets") {
  Rng rng(4242);
  for (int trial = 0; trial < 300; ++trial) {
    const int n_labels = 1 + rng.uniform_int(6);
    const int n = 1 + rng.uniform_int(40);
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(n)),
        golds(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n_labels; ++l) {
        preds[static_cast<std::size_t>(i)].push_back(rng.uniform_int(4));
        golds[static_cast<std::size_t>(i)].push_back(rng.uniform_int(4));
      }
    Confusion c(n_labels);
    for (int i = 0; i < n; ++i)
      c.add(preds[static_cast<std::size_t>(i)], golds[static_cast<std::size_t>(i)]);

    for (const auto& classes :
         {all_mentioned_classes(), std::vector<int>{1}, std::vector<int>{2}, std::vector<int>{3}}) {
      BruteCounts pooled;
      double macro_sum = 0.0;
      int macro_n = 0;
      for (int l = 0; l < n_labels; ++l) {
        const auto b = brute(preds, golds, l, classes);
        pooled.tp += b.tp;
        pooled.fp += b.fp;
        pooled.fn += b.fn;
        if (b.tp + b.fp + b.fn > 0) {
          macro_sum += f1_of(b);
          ++macro_n;
        }
      }
      CHECK(std::abs(f1_micro(c, classes) - f1_of(pooled)) < 1e-12);
      const double macro_expect = macro_n == 0 ? 0.0 : macro_sum / macro_n;
      CHECK(std::abs(f1_macro(c, classes) - macro_expect) < 1e-12);
    }
  }
}

TEST_CASE("all-not_mentioned pairs change nothing") {
  Rng rng(7);
  Confusion c(3);
  std::vector<std::vector<int>> preds, golds;
  for (int i = 0; i < 25; ++i) {
    std::vector<int> p, g;
    for (int l = 0; l < 3; ++l) {
      p.push_back(rng.uniform_int(4));
      g.push_back(rng.uniform_int(4));
    }
    preds.push_back(p);
    golds.push_back(g);
    c.add(p, g);
  }
  const double before_micro = f1_micro(c, all_mentioned_classes());
  const double before_macro = f1_macro(c, all_mentioned_classes());
  for (int i = 0; i < 500; ++i) c.add({0, 0, 0}, {0, 0, 0});
  CHECK(f1_micro(c, all_mentioned_classes()) == before_micro);
  CHECK(f1_macro(c, all_mentioned_classes()) == before_macro);
}

TEST_CASE("f1 stays within [0,1] and perfect predictions hit 1") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    Confusion c(2);
    std::vector<int> g = {rng.uniform_int(4), rng.uniform_int(4)};
    c.add(g, g);
    if (g[0] + g[1] > 0) {
      CHECK(f1_micro(c, all_mentioned_classes()) == 1.0);
    } else {
      CHECK(f1_micro(c, all_mentioned_classes()) == 0.0);  // zero denominator rule
    }
  }
  Confusion empty(4);
  CHECK(f1_micro(empty, all_mentioned_classes()) == 0.0);
  CHECK(f1_macro(empty, all_mentioned_classes()) == 0.0);
}

TEST_CASE("error categorization buckets") {
  std::vector<std::vector<int>> preds = {{0, 3, 2, 0}, {1, 0, 0, 0}};
  std::vector<std::vector<int>> golds = {{3, 3, 1, 0}, {0, 0, 0, 0}};
  // (0,l0): gold pos, pred nm -> missed. (0,l2): 2 vs 1 -> certainty
  // confusion. (1,l0): pred neg, gold nm -> falsely predicted.
  const auto e = categorize_errors(preds, golds);
  CHECK(e.missed == 1);
  CHECK(e.falsely_predicted == 1);
  CHECK(e.certainty_confusion == 1);
  CHECK(e.total() == 3);
  CHECK(e.proportion(e.missed) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("report assembly and csv output") {
  schema::LabelSchema sch;
  for (const char* id : {"alpha", "beta"}) {
    schema::Label lab;
    lab.id = id;
    lab.display_name = id;
    lab.variants = {id};
    sch.labels.push_back(lab);
  }
  std::vector<std::vector<int>> preds = {{3, 0}, {1, 2}};
  std::vector<std::vector<int>> golds = {{3, 0}, {1, 1}};
  Confusion c(2);
  for (std::size_t i = 0; i < preds.size(); ++i) c.add(preds[i], golds[i]);
  const auto rep = build_report(c, preds, golds);
  CHECK(rep.micro[0] == doctest::Approx(f1_micro(c, all_mentioned_classes())).epsilon(1e-15));
  CHECK(rep.per_label.size() == 2);
  CHECK(rep.errors.certainty_confusion == 1);

  const auto text = format_report(rep, sch);
  CHECK(text.find("micro") != std::string::npos);
  CHECK(text.find("Uncertain") != std::string::npos);

  const auto base = std::filesystem::temp_directory_path();
  const auto pl = (base / "metrics_pl.csv").string();
  const auto ec = (base / "metrics_ec.csv").string();
  write_per_label_csv(rep, sch, pl);
  write_error_csv(rep, ec);
  std::ifstream pls(pl);
  std::string header;
  std::getline(pls, header);
  CHECK(header == "label_id,f1_all,f1_negative,f1_uncertain,f1_positive");
  std::string row;
  std::getline(pls, row);
  CHECK(row.rfind("alpha,", 0) == 0);
  std::ifstream ecs(ec);
  std::getline(ecs, header);
  CHECK(header == "category,count,proportion");
  std::remove(pl.c_str());
  std::remove(ec.c_str());
}
