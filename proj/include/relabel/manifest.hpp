#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relabel::cli {

// FNV-1a 64 over a file's bytes, as a 16-digit hex string.
std::string fnv1a64_file(const std::string& path);
std::string fnv1a64_bytes(const std::string& bytes);

// Reproducibility record written next to every command's outputs: the
// resolved configuration, the seed, content hashes of every input file, the
// produced files and wall-clock timings.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;  // path -> fnv1a64
  std::vector<std::string> outputs;
  std::map<std::string, double> timings_sec;
};

void save_manifest(const RunManifest& m, const std::string& path);

// Reads a manifest; with verify_hashes the recorded input files are
// re-hashed and any mismatch (or missing file) raises data_error.
RunManifest load_manifest(const std::string& path, bool verify_hashes);

}  // namespace relabel::cli
