#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "relabel/errors.hpp"
#include "relabel/schema.hpp"

using namespace relabel;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream(path, std::ios::trunc) << content;
  return path;
}

const char* kSmall = R"([
  {"id": "a-label", "display_name": "A Label", "category": "finding"},
  {"id": "grouped", "display_name": "Grouped", "category": "crossover",
   "variants": ["One", "two", "THREE"]},
  {"id": "b-label", "display_name": "B label", "category": "impression"}
])";

}  // namespace

TEST_CASE("schema loads with stable order and derived variants") {
  const auto path = temp_file("schema_small.json", kSmall);
  const auto s = schema::load_schema(path);
  REQUIRE(s.size() == 3);
  CHECK(s.at(0).id == "a-label");
  CHECK(s.at(1).id == "grouped");
  CHECK(s.at(2).id == "b-label");
  CHECK(s.at(0).category == schema::Category::finding);
  CHECK(s.at(1).category == schema::Category::crossover);
  CHECK(s.index_of("b-label") == 2);
  CHECK(s.index_of("missing") == -1);

  // Implicit variants are the lowercased display name; explicit ones are kept.
  CHECK(schema::expand_variants(s.at(0)) == std::vector<std::string>{"a label"});
  CHECK(schema::expand_variants(s.at(1)) ==
        std::vector<std::string>{"one", "two", "three"});
  CHECK(schema::variant_count(s) == 5);
  std::remove(path.c_str());
}

TEST_CASE("schema save/load round trip") {
  const auto path = temp_file("schema_rt_in.json", kSmall);
  const auto s = schema::load_schema(path);
  const auto out = (std::filesystem::temp_directory_path() / "schema_rt_out.json").string();
  schema::save_schema(s, out);
  const auto again = schema::load_schema(out);
  CHECK(again == s);
  std::remove(path.c_str());
  std::remove(out.c_str());
}

TEST_CASE("schema rejects bad inputs") {
  CHECK_THROWS_AS(schema::load_schema("/nonexistent/schema.json"), data_error);
  const auto dup = temp_file("schema_dup.json",
                             R"([{"id":"x","display_name":"X","category":"finding"},
                                 {"id":"x","display_name":"X2","category":"finding"}])");
  CHECK_THROWS_AS(schema::load_schema(dup), data_error);
  const auto empty = temp_file("schema_empty.json", "[]");
  CHECK_THROWS_AS(schema::load_schema(empty), data_error);
  const auto badcat = temp_file("schema_badcat.json",
                                R"([{"id":"x","display_name":"X","category":"verdict"}])");
  CHECK_THROWS_AS(schema::load_schema(badcat), data_error);
  const auto novariants = temp_file(
      "schema_novar.json", R"([{"id":"x","display_name":"X","category":"finding","variants":[]}])");
  CHECK_THROWS_AS(schema::load_schema(novariants), data_error);
  const auto garbage = temp_file("schema_garbage.json", "not json at all {");
  CHECK_THROWS_AS(schema::load_schema(garbage), data_error);
  for (const auto& p : {dup, empty, badcat, novariants, garbage}) std::remove(p.c_str());
}

TEST_CASE("certainty and category string mappings") {
  CHECK(schema::certainty_from_string("negative") == schema::Certainty::negative);
  CHECK(schema::certainty_from_string("uncertain") == schema::Certainty::uncertain);
  CHECK(schema::certainty_from_string("positive") == schema::Certainty::positive);
  CHECK(schema::certainty_from_string("not_mentioned") == schema::Certainty::not_mentioned);
  CHECK_THROWS_AS(schema::certainty_from_string("maybe"), data_error);
  for (auto c : {schema::Certainty::not_mentioned, schema::Certainty::negative,
                 schema::Certainty::uncertain, schema::Certainty::positive})
    CHECK(schema::certainty_from_string(schema::certainty_to_string(c)) == c);
  for (auto c : {schema::Category::finding, schema::Category::impression,
                 schema::Category::crossover})
    CHECK(schema::category_from_string(schema::category_to_string(c)) == c);
}

TEST_CASE("reference schema shape") {
  const auto s = schema::load_schema(std::string(RELABEL_DATA_DIR) + "/labels.json");
  REQUIRE(s.size() == 31);
  int findings = 0, impressions = 0, crossover = 0;
  for (const auto& lab : s.labels) {
    if (lab.category == schema::Category::finding) ++findings;
    if (lab.category == schema::Category::impression) ++impressions;
    if (lab.category == schema::Category::crossover) ++crossover;
  }
  CHECK(findings == 13);
  CHECK(impressions == 14);
  CHECK(crossover == 4);
  CHECK(schema::variant_count(s) == 36);

  // Grouped surface forms stay fixed; all 36 surfaces are pairwise distinct.
  const int hhc = s.index_of("haemorrhage-haematoma-contusion");
  REQUIRE(hhc >= 0);
  CHECK(schema::expand_variants(s.at(hhc)) ==
        std::vector<std::string>{"haemorrhage", "haematoma", "contusion"});
  std::vector<std::string> all;
  for (const auto& lab : s.labels)
    for (const auto& v : schema::expand_variants(lab)) all.push_back(v);
  std::sort(all.begin(), all.end());
  CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
}
