#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "relabel/corpus.hpp"
#include "relabel/errors.hpp"
#include "relabel/rng.hpp"

using namespace relabel;
using corpus::tokenize;

TEST_CASE("tokenizer lowercases, strips punctuation, splits dashes") {
  CHECK(tokenize("There is NO acute infarct.") ==
        std::vector<std::string>{"there", "is", "no", "acute", "infarct"});
  CHECK(tokenize("grey-white matter") == std::vector<std::string>{"grey", "white", "matter"});
  CHECK(tokenize("mass effect; midline-shift?") ==
        std::vector<std::string>{"mass", "effect", "midline", "shift"});
  CHECK(tokenize("  lots   of\twhitespace\n") == std::vector<std::string>{"lots", "of", "whitespace"});
  CHECK(tokenize("(1.5 cm)") == std::vector<std::string>{"15", "cm"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("...,;:!") == std::vector<std::string>{});
  // Unicode dashes split like ASCII hyphens; other symbols vanish in place.
  CHECK(tokenize("grey–white × 2") == std::vector<std::string>{"grey", "white", "2"});
  CHECK(tokenize("café rôle") == std::vector<std::string>{"café", "rôle"});
}

TEST_CASE("tokenizer is idempotent over its own output") {
  Rng rng(11);
  const std::vector<std::string> samples = {
      "No acute intracranial haemorrhage, mass-effect or midline shift.",
      "THERE may be subtle low attenuation (2.3cm) in the left MCA territory!",
      "Stable appearances; no new collection — unchanged.",
  };
  for (const auto& s : samples) {
    const auto once = tokenize(s);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(tokenize(joined) == once);
  }
}

TEST_CASE("vocabulary orders by frequency then text and applies min_count") {
  const std::vector<std::vector<std::string>> sents = {
      {"brain", "scan", "brain"}, {"scan", "brain", "ct"}, {"ct", "scan", "mri"}};
  // freq: brain 3, scan 3, ct 2, mri 1
  const auto v1 = corpus::build_vocab(sents, 1);
  REQUIRE(v1.size() == 6);
  CHECK(v1.token_of(0) == "<pad>");
  CHECK(v1.token_of(1) == "<unk>");
  CHECK(v1.token_of(2) == "brain");
  CHECK(v1.token_of(3) == "scan");
  CHECK(v1.token_of(4) == "ct");
  CHECK(v1.token_of(5) == "mri");
  const auto v2 = corpus::build_vocab(sents, 2);
  CHECK(v2.size() == 5);
  CHECK(v2.id_of("mri") == corpus::Vocabulary::kUnk);
  CHECK(v2.id_of("never-seen") == corpus::Vocabulary::kUnk);
}

TEST_CASE("encoding pads, truncates and maps unknowns") {
  corpus::Vocabulary v;
  v.add("no");
  v.add("infarct");
  const auto short_ex = corpus::encode({"no", "mystery", "infarct"}, v, 6);
  CHECK(short_ex.token_ids == std::vector<int>{2, 1, 3, 0, 0, 0});
  CHECK(short_ex.real_length == 3);
  const auto long_ex = corpus::encode({"no", "no", "no", "infarct"}, v, 2);
  CHECK(long_ex.token_ids == std::vector<int>{2, 2});
  CHECK(long_ex.real_length == 2);
}

TEST_CASE("gold vectors follow schema order") {
  schema::LabelSchema sch;
  for (const char* id : {"x", "y", "z"}) {
    schema::Label lab;
    lab.id = id;
    lab.display_name = id;
    lab.variants = {id};
    sch.labels.push_back(lab);
  }
  corpus::AnnotatedSentence s;
  s.annotations["z"] = schema::Certainty::negative;
  s.annotations["x"] = schema::Certainty::positive;
  CHECK(corpus::gold_vector(s, sch) == std::vector<int>{3, 0, 1});
}

namespace {

corpus::Dataset report_fixture() {
  corpus::Dataset d;
  for (int r = 0; r < 7; ++r)
    for (int k = 0; k < 1 + r % 3; ++k) {
      corpus::AnnotatedSentence s;
      s.report_id = "rep" + std::to_string(r);
      s.text = "sentence " + std::to_string(k);
      d.push_back(s);
    }
  return d;
}

}  // namespace

TEST_CASE("report split keeps reports whole and disjoint") {
  const auto data = report_fixture();
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const auto [train, val] = corpus::split_by_report(data, 0.7, seed);
    CHECK(train.size() + val.size() == data.size());
    std::set<std::string> train_ids, val_ids;
    for (const auto& s : train) train_ids.insert(s.report_id);
    for (const auto& s : val) val_ids.insert(s.report_id);
    CHECK(train_ids.size() + val_ids.size() == 7);
    for (const auto& id : train_ids) CHECK(val_ids.count(id) == 0);
    // round(0.7 * 7) = 5 reports on the train side
    CHECK(train_ids.size() == 5);
  }
  // Identical seeds give identical partitions.
  const auto a = corpus::split_by_report(data, 0.5, 42);
  const auto b = corpus::split_by_report(data, 0.5, 42);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("report split rejects degenerate inputs") {
  const auto data = report_fixture();
  CHECK_THROWS_AS(corpus::split_by_report(data, 0.0, 1), data_error);
  CHECK_THROWS_AS(corpus::split_by_report(data, 1.0, 1), data_error);
  corpus::Dataset one;
  corpus::AnnotatedSentence s;
  s.report_id = "only";
  one.push_back(s);
  one.push_back(s);
  CHECK_THROWS_AS(corpus::split_by_report(one, 0.5, 1), data_error);
}

TEST_CASE("dataset files round trip and reject bad content") {
  schema::LabelSchema sch;
  schema::Label lab;
  lab.id = "infarct";
  lab.display_name = "Infarct";
  lab.variants = {"infarct"};
  sch.labels.push_back(lab);

  corpus::Dataset d;
  corpus::AnnotatedSentence s;
  s.report_id = "r1";
  s.text = "there is no infarct.";
  s.annotations["infarct"] = schema::Certainty::negative;
  d.push_back(s);

  const auto path = (std::filesystem::temp_directory_path() / "corpus_rt.jsonl").string();
  corpus::save_dataset(d, path);
  CHECK(corpus::load_dataset(path, sch) == d);

  const auto bad_label = (std::filesystem::temp_directory_path() / "corpus_bad1.jsonl").string();
  std::ofstream(bad_label, std::ios::trunc)
      << R"({"report_id":"r","text":"t","labels":{"tumour":"positive"}})" << "\n";
  CHECK_THROWS_AS(corpus::load_dataset(bad_label, sch), data_error);

  const auto bad_cert = (std::filesystem::temp_directory_path() / "corpus_bad2.jsonl").string();
  std::ofstream(bad_cert, std::ios::trunc)
      << R"({"report_id":"r","text":"t","labels":{"infarct":"perhaps"}})" << "\n";
  CHECK_THROWS_AS(corpus::load_dataset(bad_cert, sch), data_error);

  const auto bad_json = (std::filesystem::temp_directory_path() / "corpus_bad3.jsonl").string();
  std::ofstream(bad_json, std::ios::trunc) << "ok\n";
  try {
    corpus::load_dataset(bad_json, sch);
    FAIL("expected data_error");
  } catch (const data_error& e) {
    // Errors carry the 1-based line number.
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
  CHECK_THROWS_AS(corpus::load_dataset("/nonexistent/data.jsonl", sch), data_error);
  for (const auto& p : {path, bad_label, bad_cert, bad_json}) std::remove(p.c_str());
}

TEST_CASE("vocabulary files round trip") {
  corpus::Vocabulary v;
  v.add("zeta");
  v.add("alpha");
  const auto path = (std::filesystem::temp_directory_path() / "vocab_rt.txt").string();
  corpus::save_vocab(v, path);
  const auto again = corpus::load_vocab(path);
  CHECK(again.tokens() == v.tokens());
  CHECK(again.id_of("alpha") == 3);
  std::remove(path.c_str());
}
