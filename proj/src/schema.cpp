#include "relabel/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "relabel/errors.hpp"

namespace relabel::schema {

namespace {

std::string lowercased(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Certainty certainty_from_string(const std::string& s) {
  if (s == "negative") return Certainty::negative;
  if (s == "uncertain") return Certainty::uncertain;
  if (s == "positive") return Certainty::positive;
  if (s == "not_mentioned") return Certainty::not_mentioned;
  throw data_error("unknown certainty class: \"" + s + "\"");
}

const std::string& certainty_to_string(Certainty c) {
  static const std::string names[] = {"not_mentioned", "negative", "uncertain", "positive"};
  return names[static_cast<int>(c)];
}

Category category_from_string(const std::string& s) {
  if (s == "finding") return Category::finding;
  if (s == "impression") return Category::impression;
  if (s == "crossover") return Category::crossover;
  throw data_error("unknown label category: \"" + s + "\"");
}

const std::string& category_to_string(Category c) {
  static const std::string names[] = {"finding", "impression", "crossover"};
  return names[static_cast<int>(c)];
}

bool operator==(const Label& a, const Label& b) {
  return a.id == b.id && a.display_name == b.display_name && a.category == b.category &&
         a.variants == b.variants;
}

int LabelSchema::index_of(const std::string& id) const {
  for (int l = 0; l < size(); ++l)
    if (labels[static_cast<std::size_t>(l)].id == id) return l;
  return -1;
}

LabelSchema load_schema(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open schema file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("schema parse failure in " + path + ": " + e.what());
  }
  if (!j.is_array()) throw data_error("schema file must be a JSON array: " + path);
  if (j.empty()) throw data_error("schema file lists no labels: " + path);

  LabelSchema s;
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& o = j[i];
    if (!o.is_object() || !o.contains("id") || !o.contains("display_name") ||
        !o.contains("category"))
      throw data_error("schema entry " + std::to_string(i) +
                       " must be an object with id, display_name, category");
    Label lab;
    lab.id = o.at("id").get<std::string>();
    lab.display_name = o.at("display_name").get<std::string>();
    try {
      lab.category = category_from_string(o.at("category").get<std::string>());
    } catch (const data_error& e) {
      throw data_error(std::string(e.what()) + " (label \"" + lab.id + "\")");
    }
    if (!seen.insert(lab.id).second)
      throw data_error("duplicate label id \"" + lab.id + "\" in " + path);
    if (o.contains("variants")) {
      for (const auto& v : o.at("variants")) lab.variants.push_back(lowercased(v.get<std::string>()));
      if (lab.variants.empty())
        throw data_error("label \"" + lab.id + "\" has an explicit empty variant list");
    } else {
      lab.variants.push_back(lowercased(lab.display_name));
    }
    s.labels.push_back(std::move(lab));
  }
  return s;
}

void save_schema(const LabelSchema& s, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const Label& lab : s.labels) {
    nlohmann::json o;
    o["id"] = lab.id;
    o["display_name"] = lab.display_name;
    o["category"] = category_to_string(lab.category);
    o["variants"] = lab.variants;
    j.push_back(std::move(o));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write schema file: " + path);
  os << j.dump(2) << "\n";
}

std::vector<std::string> expand_variants(const Label& label) {
  std::vector<std::string> out;
  out.reserve(label.variants.size());
  for (const std::string& v : label.variants) out.push_back(lowercased(v));
  return out;
}

int variant_count(const LabelSchema& s) {
  int n = 0;
  for (const Label& lab : s.labels) n += static_cast<int>(lab.variants.size());
  return n;
}

}  // namespace relabel::schema
