#include "relabel/embed_pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>

#include "relabel/corpus.hpp"
#include "relabel/errors.hpp"
#include "relabel/rng.hpp"

namespace relabel::pretrain {

namespace {

struct Sampler {
  // Cumulative unigram^0.75 mass per token id; draws by binary search.
  std::vector<double> cumulative;

  explicit Sampler(const std::vector<long>& freq) {
    cumulative.reserve(freq.size());
    double acc = 0.0;
    for (long f : freq) {
      acc += std::pow(static_cast<double>(f), 0.75);
      cumulative.push_back(acc);
    }
  }

  int draw(Rng& rng) const {
    const double x = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return static_cast<int>(std::min<std::size_t>(
        static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1));
  }
};

}  // namespace

encoders::EmbeddingFile skipgram_train(const std::vector<std::vector<std::string>>& docs,
                                       const PretrainConfig& cfg) {
  if (cfg.dim < 1 || cfg.window < 1 || cfg.negatives < 0 || cfg.min_count < 1 ||
      cfg.epochs < 0 || !(cfg.lr > 0.0))
    throw error("pretraining configuration has non-positive settings");

  // Frequency-then-lexicographic token order, the same convention the
  // downstream vocabulary uses.
  std::map<std::string, long> freq_map;
  for (const auto& doc : docs)
    for (const auto& tok : doc) ++freq_map[tok];
  std::vector<std::pair<std::string, long>> items(freq_map.begin(), freq_map.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens;
  std::vector<long> freq;
  std::unordered_map<std::string, int> index;
  for (const auto& [tok, count] : items) {
    if (count < cfg.min_count) continue;
    index.emplace(tok, static_cast<int>(tokens.size()));
    tokens.push_back(tok);
    freq.push_back(count);
  }
  if (tokens.empty())
    throw data_error("no token reaches the minimum count; nothing to pretrain on");
  const int vsize = static_cast<int>(tokens.size());

  // Documents as id sequences, dropping cut tokens.
  std::vector<std::vector<int>> streams;
  long total_tokens = 0;
  for (const auto& doc : docs) {
    std::vector<int> ids;
    for (const auto& tok : doc) {
      auto it = index.find(tok);
      if (it != index.end()) ids.push_back(it->second);
    }
    total_tokens += static_cast<long>(ids.size());
    if (!ids.empty()) streams.push_back(std::move(ids));
  }

  Rng rng(cfg.seed);
  encoders::EmbeddingFile out;
  out.tokens = tokens;
  // Center vectors start small and random, output vectors at zero.
  out.vectors = autodiff::Tensor<double>::uniform(
      {vsize, cfg.dim}, -0.5 / static_cast<double>(cfg.dim), 0.5 / static_cast<double>(cfg.dim),
      rng);
  autodiff::Tensor<double> output = autodiff::Tensor<double>::zeros({vsize, cfg.dim});

  if (cfg.epochs == 0 || total_tokens == 0) return out;

  const Sampler sampler(freq);
  const double total_work =
      static_cast<double>(cfg.epochs) * static_cast<double>(total_tokens);
  long processed = 0;
  std::vector<double> accum(static_cast<std::size_t>(cfg.dim));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& ids : streams) {
      for (std::size_t c = 0; c < ids.size(); ++c) {
        const double alpha =
            cfg.lr * std::max(1e-4, 1.0 - static_cast<double>(processed) / total_work);
        ++processed;
        const int center = ids[c];
        auto vc = out.vectors.mat().row(center);
        // Seeded shrink of the window, as in the classic implementation.
        const int shrink = rng.uniform_int(cfg.window);
        const int reach = cfg.window - shrink;
        for (int off = -reach; off <= reach; ++off) {
          if (off == 0) continue;
          const long pos = static_cast<long>(c) + off;
          if (pos < 0 || pos >= static_cast<long>(ids.size())) continue;
          const int context = ids[static_cast<std::size_t>(pos)];
          std::fill(accum.begin(), accum.end(), 0.0);
          for (int s = 0; s < cfg.negatives + 1; ++s) {
            int target;
            double label;
            if (s == 0) {
              target = context;
              label = 1.0;
            } else {
              target = sampler.draw(rng);
              if (target == context) continue;
              label = 0.0;
            }
            auto ut = output.mat().row(target);
            const double f = 1.0 / (1.0 + std::exp(-vc.dot(ut)));
            const double gshift = (label - f) * alpha;
            for (int j = 0; j < cfg.dim; ++j) {
              accum[static_cast<std::size_t>(j)] += gshift * ut(j);
              ut(j) += gshift * vc(j);
            }
          }
          for (int j = 0; j < cfg.dim; ++j) vc(j) += accum[static_cast<std::size_t>(j)];
        }
      }
    }
  }
  if (!out.vectors.all_finite())
    throw numeric_error("pretraining diverged to non-finite embedding values");
  return out;
}

encoders::EmbeddingFile skipgram_train_file(const std::string& path, const PretrainConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open pretraining corpus: " + path);
  std::vector<std::vector<std::string>> docs;
  std::string line;
  while (std::getline(is, line)) {
    auto toks = corpus::tokenize(line);
    if (!toks.empty()) docs.push_back(std::move(toks));
  }
  if (docs.empty()) throw data_error("pretraining corpus holds no tokens: " + path);
  return skipgram_train(docs, cfg);
}

}  // namespace relabel::pretrain
