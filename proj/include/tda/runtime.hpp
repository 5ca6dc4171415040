#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tda/ffn.hpp"
#include "tda/model.hpp"
#include "tda/tokenizer.hpp"

namespace tda {

class KvCache {
 public:
  explicit KvCache(const ModelConfig& config);

  std::size_t length() const noexcept { return length_; }
  std::size_t capacity() const noexcept { return capacity_; }

  std::span<float> key(std::size_t layer, std::size_t pos);
  std::span<float> value(std::size_t layer, std::size_t pos);
  std::span<const float> key(std::size_t layer, std::size_t pos) const;
  std::span<const float> value(std::size_t layer, std::size_t pos) const;

  // Commits the slot written at position length().
  void advance();

 private:
  std::size_t d_model_;
  std::size_t capacity_;
  std::size_t length_ = 0;
  std::vector<std::vector<float>> keys_;
  std::vector<std::vector<float>> values_;
};

// Single-token forward pass with reusable scratch buffers.
class Decoder {
 public:
  explicit Decoder(const ModelWeights& weights);

  // Runs `token` at position cache.length() and appends its K/V. With
  // ffn == nullptr the FFN runs dense; trace (if given) then receives the
  // FFN inputs and gated hidden vectors. Returns logits (valid until the
  // next call).
  std::span<const float> step(TokenId token, KvCache& cache, FfnStrategy* ffn = nullptr,
                              PrefillTrace* trace = nullptr);

 private:
  const ModelWeights& w_;
  std::vector<float> x_, xn_, q_, attn_, proj_, ffn_out_, hidden_, scores_, logits_;
};

struct PrefillResult {
  KvCache cache;
  Vector logits;
  PrefillTrace trace;
};

PrefillResult prefill(const ModelWeights& weights, std::span<const TokenId> prompt, bool record_trace = true);

struct SamplingConfig {
  enum class Mode { greedy, temperature };
  Mode mode = Mode::greedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

struct GenerationRequest {
  std::vector<TokenId> prompt;
  std::size_t max_new_tokens = 0;
  SamplingConfig sampling;
  // 0 = masks built once from the prompt and reused for the whole generation.
  // k > 0 rebuilds them from a dense pass over the running sequence every k steps.
  std::size_t mask_refresh_interval = 0;
};

struct GenerationResult {
  std::vector<TokenId> tokens;
  std::vector<double> step_seconds;
  double prefill_seconds = 0.0;
  double generation_seconds = 0.0;
  FfnCounters generation_counters;
  std::size_t cache_length = 0;
};

// Called after each generated token (step index from 0).
using StepObserver = std::function<void(std::size_t step, TokenId token, const FfnStrategy& strategy)>;

GenerationResult generate(const ModelWeights& weights, const GenerationRequest& request, FfnStrategy& strategy,
                          const StepObserver& observer = {});

// Lowest index wins ties.
TokenId argmax_token(std::span<const float> logits);

// Logits for every position, recomputed from scratch with full causal
// attention and dense FFNs (no cache). Reference path for equivalence tests.
std::vector<Vector> reference_forward(const ModelWeights& weights, std::span<const TokenId> tokens);

}  // namespace tda
