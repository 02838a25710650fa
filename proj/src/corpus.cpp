#include "relabel/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "relabel/errors.hpp"

namespace relabel::corpus {

namespace {

// Decodes one UTF-8 code point starting at i; advances i. Malformed bytes
// are consumed one at a time and reported as U+FFFD.
char32_t next_code_point(const std::string& s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  int len = 1;
  char32_t cp = b0;
  if (b0 >= 0xf0) {
    len = 4;
    cp = b0 & 0x07u;
  } else if (b0 >= 0xe0) {
    len = 3;
    cp = b0 & 0x0fu;
  } else if (b0 >= 0xc0) {
    len = 2;
    cp = b0 & 0x1fu;
  }
  if (len == 1) {
    ++i;
    return cp;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return 0xfffd;
  }
  for (int k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + static_cast<std::size_t>(k));
    if ((bk & 0xc0u) != 0x80u) {
      ++i;
      return 0xfffd;
    }
    cp = (cp << 6) | (bk & 0x3fu);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

bool is_dash(char32_t cp) {
  // ASCII hyphen plus the common Unicode dash block.
  return cp == '-' || (cp >= 0x2010 && cp <= 0x2015) || cp == 0x2212;
}

// Punctuation or symbol characters are dropped from tokens. ASCII is exact;
// beyond ASCII the common punctuation blocks are covered and anything else
// is kept as a word character.
bool is_punct_or_symbol(char32_t cp) {
  if (cp < 128) {
    const char c = static_cast<char>(cp);
    return !((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) &&
           !(c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v');
  }
  return (cp >= 0x2000 && cp <= 0x206f)    // general punctuation
         || (cp >= 0x2190 && cp <= 0x2bff) // arrows, math and misc symbols
         || (cp >= 0x00a1 && cp <= 0x00bf) // latin-1 punctuation and signs
         || cp == 0x00d7 || cp == 0x00f7;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0x00a0 || (cp >= 0x2000 && cp <= 0x200a) || cp == 0x2028 || cp == 0x2029;
}

void append_code_point(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) {
      out.push_back(current);
      current.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = next_code_point(text, i);
    if (is_space(cp) || is_dash(cp)) {
      flush();
    } else if (is_punct_or_symbol(cp)) {
      // dropped in place; "don't" becomes "dont"
    } else if (cp < 128) {
      char c = static_cast<char>(cp);
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      current.push_back(c);
    } else {
      append_code_point(current, cp);
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<unk>"};
  index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw error("vocabulary id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

void Vocabulary::add(const std::string& token) {
  if (index_.count(token)) throw error("token already in vocabulary: " + token);
  index_.emplace(token, size());
  tokens_.push_back(token);
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, int min_count) {
  if (min_count < 1) throw error("min_count must be at least 1");
  std::map<std::string, std::int64_t> freq;
  for (const auto& sent : sentences)
    for (const auto& tok : sent) ++freq[tok];
  std::vector<std::pair<std::string, std::int64_t>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, count] : items)
    if (count >= min_count) v.add(tok);
  return v;
}

EncodedExample encode(const std::vector<std::string>& tokens, const Vocabulary& vocab, int n_tok) {
  if (n_tok < 1) throw error("n_tok must be at least 1");
  EncodedExample ex;
  ex.token_ids.assign(static_cast<std::size_t>(n_tok), Vocabulary::kPad);
  ex.real_length = std::min<int>(n_tok, static_cast<int>(tokens.size()));
  for (int i = 0; i < ex.real_length; ++i)
    ex.token_ids[static_cast<std::size_t>(i)] = vocab.id_of(tokens[static_cast<std::size_t>(i)]);
  return ex;
}

std::vector<int> gold_vector(const AnnotatedSentence& s, const schema::LabelSchema& sch) {
  std::vector<int> gold(static_cast<std::size_t>(sch.size()),
                        static_cast<int>(schema::Certainty::not_mentioned));
  for (const auto& [id, cert] : s.annotations) {
    const int l = sch.index_of(id);
    if (l < 0) throw data_error("annotation uses label id not in schema: \"" + id + "\"");
    gold[static_cast<std::size_t>(l)] = static_cast<int>(cert);
  }
  return gold;
}

std::pair<Dataset, Dataset> split_by_report(const Dataset& data, double train_fraction,
                                            std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw data_error("train fraction must lie strictly between 0 and 1");
  std::vector<std::string> reports;
  std::set<std::string> seen;
  for (const auto& s : data)
    if (seen.insert(s.report_id).second) reports.push_back(s.report_id);
  if (reports.size() < 2) throw data_error("report-level split needs at least 2 distinct reports");

  // First-appearance order, then a seeded shuffle, makes the partition a
  // pure function of (data order, seed).
  Rng rng(seed);
  rng.shuffle(reports);
  int n_train = static_cast<int>(std::lround(train_fraction * static_cast<double>(reports.size())));
  n_train = std::max(1, std::min(static_cast<int>(reports.size()) - 1, n_train));
  std::set<std::string> train_reports(reports.begin(), reports.begin() + n_train);

  std::pair<Dataset, Dataset> out;
  for (const auto& s : data)
    (train_reports.count(s.report_id) ? out.first : out.second).push_back(s);
  return out;
}

Dataset load_dataset(const std::string& path, const schema::LabelSchema& sch) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open dataset file: " + path);
  Dataset data;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw data_error(path + ":" + std::to_string(line_no) + ": malformed line: " + e.what());
    }
    AnnotatedSentence s;
    try {
      s.report_id = j.at("report_id").get<std::string>();
      s.text = j.at("text").get<std::string>();
      if (j.contains("labels")) {
        for (const auto& [id, cert] : j.at("labels").items()) {
          if (sch.index_of(id) < 0)
            throw data_error("unknown label id \"" + id + "\"");
          s.annotations[id] = schema::certainty_from_string(cert.get<std::string>());
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw data_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const data_error& e) {
      throw data_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    data.push_back(std::move(s));
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write dataset file: " + path);
  for (const auto& s : data) {
    nlohmann::json j;
    j["report_id"] = s.report_id;
    j["text"] = s.text;
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& [id, cert] : s.annotations) labels[id] = schema::certainty_to_string(cert);
    j["labels"] = std::move(labels);
    os << j.dump() << "\n";
  }
}

void save_vocab(const Vocabulary& v, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write vocabulary file: " + path);
  for (const std::string& tok : v.tokens()) os << tok << "\n";
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open vocabulary file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) lines.push_back(line);
  if (lines.size() < 2 || lines[0] != "<pad>" || lines[1] != "<unk>")
    throw data_error("vocabulary file must start with <pad> and <unk>: " + path);
  Vocabulary v;
  for (std::size_t i = 2; i < lines.size(); ++i) v.add(lines[i]);
  return v;
}

}  // namespace relabel::corpus
