#include "tda/config.hpp"

#include <fstream>

#include "tda/error.hpp"
#include "tda/tokenizer.hpp"

namespace tda {

void ModelConfig::validate() const {
  if (n_layers == 0 || d_model == 0 || d_ff == 0 || n_heads == 0 || max_seq_len == 0) {
    throw ContractError("ModelConfig: all dimensions must be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw ContractError("ModelConfig: d_model (" + std::to_string(d_model) +
                        ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
  }
  if (vocab_size < kVocabMin) {
    throw ContractError("ModelConfig: vocab_size must be >= " + std::to_string(kVocabMin));
  }
  if (!(rms_eps > 0.0)) throw ContractError("ModelConfig: rms_eps must be positive");
}

nlohmann::ordered_json to_json(const ModelConfig& config) {
  nlohmann::ordered_json j;
  j["n_layers"] = config.n_layers;
  j["d_model"] = config.d_model;
  j["d_ff"] = config.d_ff;
  j["n_heads"] = config.n_heads;
  j["vocab_size"] = config.vocab_size;
  j["activation"] = std::string(to_string(config.activation));
  j["max_seq_len"] = config.max_seq_len;
  j["positional"] = config.positional == PositionalEncoding::sinusoidal ? "sinusoidal" : "none";
  j["rms_eps"] = config.rms_eps;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.n_layers = j.at("n_layers").get<std::size_t>();
    c.d_model = j.at("d_model").get<std::size_t>();
    c.d_ff = j.at("d_ff").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.vocab_size = j.value("vocab_size", kVocabMin);
    c.activation = parse_activation(j.value("activation", std::string("silu")));
    c.max_seq_len = j.value("max_seq_len", std::size_t{1024});
    const std::string pos = j.value("positional", std::string("none"));
    if (pos == "sinusoidal") {
      c.positional = PositionalEncoding::sinusoidal;
    } else if (pos == "none") {
      c.positional = PositionalEncoding::none;
    } else {
      throw DataError("unknown positional encoding '" + pos + "'");
    }
    c.rms_eps = j.value("rms_eps", 1e-5);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open model config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("model config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

void write_config(const std::filesystem::path& path, const ModelConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model config '" + path.string() + "'");
  out << to_json(config).dump(2) << '\n';
}

std::filesystem::path default_config_path(const std::filesystem::path& weights_path) {
  return std::filesystem::path(weights_path.string() + ".config.json");
}

}  // namespace tda
