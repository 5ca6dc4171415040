#include <gtest/gtest.h>

#include "tda/error.hpp"
#include "tda/runtime.hpp"
#include "tda/sparsity.hpp"
#include "tda/strategies.hpp"
#include "test_util.hpp"

using namespace tda;

namespace {

std::vector<Vector> cached_logits(const ModelWeights& w, std::span<const TokenId> tokens) {
  KvCache cache(w.config);
  Decoder dec(w);
  std::vector<Vector> out;
  for (TokenId t : tokens) {
    const auto l = dec.step(t, cache);
    out.emplace_back(l.begin(), l.end());
  }
  return out;
}

}  // namespace

class RuntimeEquivalence : public ::testing::TestWithParam<PositionalEncoding> {};

TEST_P(RuntimeEquivalence, CachedDecodeMatchesFullRecompute) {
  ModelConfig c = test::small_config(3, 32, 64);
  c.positional = GetParam();
  const ModelWeights w = make_toy_model(c, 11);
  std::mt19937_64 rng(5);
  const auto tokens = test::random_tokens(rng, 40);
  const auto a = cached_logits(w, tokens);
  const auto b = reference_forward(w, tokens);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_LT(test::rel_diff(a[t], b[t]), 1e-4) << "position " << t;
}

INSTANTIATE_TEST_SUITE_P(Positional, RuntimeEquivalence,
                         ::testing::Values(PositionalEncoding::none, PositionalEncoding::sinusoidal),
                         [](const auto& info) {
                           return std::string(info.param == PositionalEncoding::none ? "none" : "sinusoidal");
                         });

TEST(Runtime, AttentionIsCausal) {
  const ModelWeights w = test::small_model(2);
  std::mt19937_64 rng(6);
  auto tokens = test::random_tokens(rng, 20);
  const auto a = cached_logits(w, tokens);
  tokens[15] = tokens[15] == 'a' ? 'b' : 'a';
  const auto b = cached_logits(w, tokens);
  for (std::size_t t = 0; t < 15; ++t) EXPECT_EQ(a[t], b[t]) << t;
  EXPECT_NE(a[15], b[15]);
}

TEST(Runtime, PrefillTraceHoldsGatedHidden) {
  const ModelWeights w = test::small_model(4);
  const auto pre = prefill(w, tokenize("trace me"));
  ASSERT_EQ(pre.trace.n_tokens(), 9u);
  ASSERT_EQ(pre.cache.length(), 9u);
  for (std::size_t l = 0; l < w.config.n_layers; ++l) {
    for (std::size_t t = 0; t < pre.trace.n_tokens(); ++t) {
      const Vector h = gated_hidden(w.layers[l], w.config.activation, pre.trace.ffn_input(l, t));
      const auto rec = pre.trace.hidden(l, t);
      EXPECT_EQ(Vector(rec.begin(), rec.end()), h);
    }
  }
}

TEST(Runtime, CacheOverflowIsReported) {
  ModelConfig c = test::small_config();
  c.max_seq_len = 8;
  const ModelWeights w = make_toy_model(c, 1);
  KvCache cache(c);
  Decoder dec(w);
  for (int i = 0; i < 8; ++i) dec.step('a', cache);
  EXPECT_THROW(dec.step('a', cache), CacheOverflowError);

  DenseFfn dense;
  GenerationRequest req{tokenize("abc"), 5};
  EXPECT_THROW(generate(w, req, dense), CacheOverflowError);
  req.max_new_tokens = 4;
  EXPECT_EQ(generate(w, req, dense).tokens.size(), 4u);
}

TEST(Runtime, ArgmaxPrefersLowestIndex) {
  const Vector l{1.0f, 3.0f, 3.0f, -1.0f};
  EXPECT_EQ(argmax_token(l), 1);
}

TEST(Runtime, GreedyGenerationIsDeterministic) {
  const ModelWeights w = test::small_model(8);
  DenseFfn d1, d2;
  const GenerationRequest req{tokenize("The quick brown fox"), 24};
  const auto a = generate(w, req, d1);
  const auto b = generate(w, req, d2);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.cache_length, req.prompt.size() + req.max_new_tokens - 1);
  // Step 0 comes from the prefill logits; each later step costs one decode.
  EXPECT_EQ(a.generation_counters.calls, (req.max_new_tokens - 1) * w.config.n_layers);
}

TEST(Runtime, TemperatureSamplingFollowsSeed) {
  const ModelWeights w = test::small_model(8);
  DenseFfn d;
  GenerationRequest req{tokenize("seeded"), 32};
  req.sampling.mode = SamplingConfig::Mode::temperature;
  req.sampling.temperature = 1.5;
  req.sampling.seed = 42;
  const auto a = generate(w, req, d);
  const auto b = generate(w, req, d);
  EXPECT_EQ(a.tokens, b.tokens);
  req.sampling.seed = 43;
  EXPECT_NE(generate(w, req, d).tokens, a.tokens);
}

TEST(Runtime, ObserverSeesEveryStep) {
  const ModelWeights w = test::small_model(8);
  DenseFfn d;
  std::vector<TokenId> seen;
  const auto r = generate(w, {tokenize("obs"), 6}, d,
                          [&](std::size_t step, TokenId tok, const FfnStrategy&) {
                            EXPECT_EQ(step, seen.size());
                            seen.push_back(tok);
                          });
  EXPECT_EQ(seen, r.tokens);
}
