#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tda/model.hpp"
#include "tda/tensor.hpp"
#include "tda/tokenizer.hpp"

namespace tda::test {

inline ModelConfig small_config(std::size_t layers = 2, std::size_t d_model = 32, std::size_t d_ff = 96,
                                ActivationKind act = ActivationKind::silu) {
  ModelConfig c;
  c.n_layers = layers;
  c.d_model = d_model;
  c.d_ff = d_ff;
  c.n_heads = 4;
  c.vocab_size = 257;
  c.activation = act;
  c.max_seq_len = 512;
  return c;
}

inline ModelWeights small_model(std::uint64_t seed, std::size_t layers = 2, std::size_t d_model = 32,
                                std::size_t d_ff = 96, ActivationKind act = ActivationKind::silu) {
  return make_toy_model(small_config(layers, d_model, d_ff, act), seed);
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double stddev = 1.0) {
  std::normal_distribution<float> dist(0.0f, static_cast<float>(stddev));
  Vector v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline std::vector<TokenId> random_tokens(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> dist(32, 126);
  std::vector<TokenId> t{kBosToken};
  while (t.size() < n) t.push_back(dist(rng));
  return t;
}

inline double rel_diff(std::span<const float> a, std::span<const float> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (double(a[i]) - b[i]) * (double(a[i]) - b[i]);
    den += double(b[i]) * b[i];
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace tda::test
