#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "tda/tensor.hpp"

namespace tda {

enum class PositionalEncoding { none, sinusoidal };

struct ModelConfig {
  std::size_t n_layers = 4;
  std::size_t d_model = 256;
  std::size_t d_ff = 1024;
  std::size_t n_heads = 4;
  std::size_t vocab_size = 257;
  ActivationKind activation = ActivationKind::silu;
  std::size_t max_seq_len = 1024;
  PositionalEncoding positional = PositionalEncoding::none;
  double rms_eps = 1e-5;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }

  // Throws ContractError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::ordered_json to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

ModelConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const ModelConfig& config);

// "<weights path>.config.json"
std::filesystem::path default_config_path(const std::filesystem::path& weights_path);

}  // namespace tda
