#include <cmath>
#include <random>

#include "tda/model.hpp"

namespace tda {

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, float stddev, std::mt19937_64& rng) {
  std::normal_distribution<float> dist(0.0f, stddev);
  Matrix m(rows, cols);
  for (float& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace

ModelWeights make_toy_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const std::size_t dm = config.d_model;
  const std::size_t dff = config.d_ff;
  const float in_scale = 1.0f / std::sqrt(static_cast<float>(dm));
  const float down_scale = 1.0f / std::sqrt(static_cast<float>(dff));

  ModelWeights w;
  w.config = config;
  w.embed = gaussian(config.vocab_size, dm, 1.0f, rng);
  w.layers.resize(config.n_layers);
  for (LayerWeights& l : w.layers) {
    l.attn_q = gaussian(dm, dm, in_scale, rng);
    l.attn_k = gaussian(dm, dm, in_scale, rng);
    l.attn_v = gaussian(dm, dm, in_scale, rng);
    l.attn_o = gaussian(dm, dm, in_scale, rng);
    l.ffn_gate = gaussian(dff, dm, in_scale, rng);
    l.ffn_up = gaussian(dff, dm, in_scale, rng);
    l.ffn_down = gaussian(dm, dff, down_scale, rng);
    l.norm1.assign(dm, 1.0f);
    l.norm2.assign(dm, 1.0f);
    l.compute_derived();
  }
  w.final_norm.assign(dm, 1.0f);
  w.lm_head = gaussian(config.vocab_size, dm, in_scale, rng);
  return w;
}

}  // namespace tda
