#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tda/config.hpp"
#include "tda/flat_tensor.hpp"
#include "tda/tensor.hpp"

namespace tda {

// One decoder block. The gated FFN computes
//   ffn_down * (act(ffn_gate * x) ⊙ (ffn_up * x)).
struct LayerWeights {
  Matrix attn_q, attn_k, attn_v, attn_o;  // d_model x d_model
  Matrix ffn_gate;                        // d_ff x d_model
  Matrix ffn_up;                          // d_ff x d_model
  Matrix ffn_down;                        // d_model x d_ff
  Vector norm1, norm2;                    // d_model

  // ‖ffn_down[:, i]‖₂, derived once at load.
  Vector down_col_norms;

  void compute_derived();
};

struct ModelWeights {
  ModelConfig config;
  Matrix embed;    // vocab x d_model
  std::vector<LayerWeights> layers;
  Vector final_norm;
  Matrix lm_head;  // vocab x d_model

  // Validates names and shapes; errors name the offending tensor.
  static ModelWeights from_tensors(const ModelConfig& config, TensorMap tensors);
  TensorMap to_tensors() const;
};

ModelWeights load_weights(const std::filesystem::path& path, const ModelConfig& config);
void save_weights(const std::filesystem::path& path, const ModelWeights& weights);

// Random initialization, deterministic in (config, seed).
ModelWeights make_toy_model(const ModelConfig& config, std::uint64_t seed);

}  // namespace tda
