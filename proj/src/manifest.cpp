#include "relabel/manifest.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "relabel/errors.hpp"

namespace relabel::cli {

std::string fnv1a64_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw data_error("cannot hash missing file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return fnv1a64_bytes(buf.str());
}

void save_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["input_hashes"] = m.input_hashes;
  j["outputs"] = m.outputs;
  j["timings_sec"] = m.timings_sec;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write manifest: " + path);
  os << j.dump(2) << "\n";
}

RunManifest load_manifest(const std::string& path, bool verify_hashes) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("manifest parse failure in " + path + ": " + e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.input_hashes = j.at("input_hashes").get<std::map<std::string, std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.timings_sec = j.at("timings_sec").get<std::map<std::string, double>>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error("manifest field error in " + path + ": " + e.what());
  }
  if (verify_hashes) {
    for (const auto& [file, recorded] : m.input_hashes) {
      const std::string now = fnv1a64_file(file);
      if (now != recorded)
        throw data_error("manifest hash mismatch for " + file + ": recorded " + recorded +
                         ", found " + now);
    }
  }
  return m;
}

}  // namespace relabel::cli
