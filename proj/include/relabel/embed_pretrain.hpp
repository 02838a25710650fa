#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relabel/encoders.hpp"

namespace relabel::pretrain {

struct PretrainConfig {
  int dim = 200;
  int epochs = 30;
  int window = 5;
  int negatives = 5;
  double lr = 0.025;  // linearly decayed over the run
  int min_count = 5;
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over tokenized documents. Center vectors
// are trained against output vectors of the true context word and `negatives`
// draws from the unigram^0.75 distribution; the center vectors are returned.
// Deterministic per seed; zero epochs returns the seeded initialization.
// Throws data_error when nothing survives the frequency cutoff.
encoders::EmbeddingFile skipgram_train(const std::vector<std::vector<std::string>>& docs,
                                       const PretrainConfig& cfg);

// Convenience: reads a UTF-8 plain-text file, one document per line,
// tokenizes each line and trains.
encoders::EmbeddingFile skipgram_train_file(const std::string& path, const PretrainConfig& cfg);

}  // namespace relabel::pretrain
