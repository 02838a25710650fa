#include "relabel/model.hpp"

#include <fstream>

#include <json.hpp>

#include "relabel/errors.hpp"

namespace relabel::model {

void ModelConfig::validate() const {
  if (n_tok < 1 || embed_dim < 1 || n_labels < 1 || n_classes < 2 || vocab_size < 2)
    throw error("model configuration has non-positive dimensions");
  if (encoder != encoders::EncoderKind::mean && hidden < 2)
    throw error("hidden size must be at least 2");
  if (encoder != encoders::EncoderKind::mean && hidden % 2 != 0)
    throw error("hidden size must be even (two directions / two kernel groups)");
  if (deep_classifier && head == heads::HeadKind::pooled)
    throw error("the deep classifier requires an attention head");
}

void save_model_config(const ModelConfig& cfg, const std::string& path) {
  nlohmann::json j;
  j["model"] = encoders::encoder_kind_to_string(cfg.encoder);
  j["head"] = heads::head_kind_to_string(cfg.head);
  j["deep_classifier"] = cfg.deep_classifier;
  j["strict_parity"] = cfg.strict_parity;
  j["n_tok"] = cfg.n_tok;
  j["embed_dim"] = cfg.embed_dim;
  j["hidden"] = cfg.hidden;
  j["n_labels"] = cfg.n_labels;
  j["n_classes"] = cfg.n_classes;
  j["vocab_size"] = cfg.vocab_size;
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw data_error("cannot write model config: " + path);
  os << j.dump(2) << "\n";
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open model config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("model config parse failure in " + path + ": " + e.what());
  }
  ModelConfig cfg;
  try {
    cfg.encoder = encoders::encoder_kind_from_string(j.at("model").get<std::string>());
    cfg.head = heads::head_kind_from_string(j.at("head").get<std::string>());
    cfg.deep_classifier = j.at("deep_classifier").get<bool>();
    cfg.strict_parity = j.at("strict_parity").get<bool>();
    cfg.n_tok = j.at("n_tok").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.n_labels = j.at("n_labels").get<int>();
    cfg.n_classes = j.at("n_classes").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw data_error("model config field error in " + path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace relabel::model
