#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "tda/error.hpp"
#include "tda/runtime.hpp"

namespace tda {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Sampler {
 public:
  explicit Sampler(const SamplingConfig& config) : config_(config), rng_(config.seed) {
    if (config_.mode == SamplingConfig::Mode::temperature && !(config_.temperature > 0.0)) {
      throw ContractError("sampling temperature must be positive");
    }
  }

  TokenId operator()(std::span<const float> logits) {
    if (config_.mode == SamplingConfig::Mode::greedy) return argmax_token(logits);
    double peak = logits[0];
    for (const float l : logits) peak = std::max(peak, static_cast<double>(l));
    probs_.resize(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      probs_[i] = std::exp((logits[i] - peak) / config_.temperature);
      total += probs_[i];
    }
    const double draw = std::uniform_real_distribution<double>(0.0, total)(rng_);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      acc += probs_[i];
      if (draw < acc) return static_cast<TokenId>(i);
    }
    return static_cast<TokenId>(probs_.size() - 1);
  }

 private:
  SamplingConfig config_;
  std::mt19937_64 rng_;
  std::vector<double> probs_;
};

}  // namespace

GenerationResult generate(const ModelWeights& weights, const GenerationRequest& request, FfnStrategy& strategy,
                          const StepObserver& observer) {
  const auto& c = weights.config;
  if (request.prompt.empty()) throw ContractError("generate: empty prompt");
  if (request.prompt.size() + request.max_new_tokens > c.max_seq_len) {
    throw CacheOverflowError("prompt (" + std::to_string(request.prompt.size()) + ") + max_new_tokens (" +
                             std::to_string(request.max_new_tokens) + ") exceeds max_seq_len (" +
                             std::to_string(c.max_seq_len) + ")");
  }
  Sampler sample(request.sampling);

  GenerationResult result;
  const auto prefill_start = Clock::now();
  PrefillResult pre = prefill(weights, request.prompt, true);
  strategy.begin_sequence(weights, pre.trace);
  result.prefill_seconds = seconds_since(prefill_start);
  strategy.reset_counters();

  Decoder decoder(weights);
  std::span<const float> logits = pre.logits;
  result.tokens.reserve(request.max_new_tokens);
  result.step_seconds.reserve(request.max_new_tokens);
  for (std::size_t step = 0; step < request.max_new_tokens; ++step) {
    const auto start = Clock::now();
    if (step > 0) {
      if (request.mask_refresh_interval > 0 && step % request.mask_refresh_interval == 0) {
        std::vector<TokenId> seen(request.prompt);
        seen.insert(seen.end(), result.tokens.begin(), result.tokens.end() - 1);
        strategy.begin_sequence(weights, prefill(weights, seen, true).trace);
      }
      logits = decoder.step(result.tokens.back(), pre.cache, &strategy);
    }
    const TokenId token = sample(logits);
    result.step_seconds.push_back(seconds_since(start));
    result.generation_seconds += result.step_seconds.back();
    result.tokens.push_back(token);
    if (observer) observer(step, token, strategy);
  }
  result.generation_counters = strategy.counters();
  result.cache_length = pre.cache.length();
  return result;
}

}  // namespace tda
