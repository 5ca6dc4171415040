#include <algorithm>
#include <cmath>
#include <string>

#include "tda/error.hpp"
#include "tda/runtime.hpp"
#include "tda/simd.hpp"

namespace tda {

namespace {

void add_positional(std::span<float> x, std::size_t pos) {
  const std::size_t d = x.size();
  for (std::size_t i = 0; i + 1 < d; i += 2) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
    x[i] += static_cast<float>(std::sin(static_cast<double>(pos) * freq));
    x[i + 1] += static_cast<float>(std::cos(static_cast<double>(pos) * freq));
  }
}

void check_token(const ModelConfig& config, TokenId token) {
  if (token < 0 || static_cast<std::size_t>(token) >= config.vocab_size) {
    throw ContractError("token id " + std::to_string(token) + " outside vocabulary");
  }
}

void embed_token(const ModelWeights& w, TokenId token, std::size_t pos, std::span<float> x) {
  check_token(w.config, token);
  const auto row = w.embed.row(static_cast<std::size_t>(token));
  std::copy(row.begin(), row.end(), x.begin());
  if (w.config.positional == PositionalEncoding::sinusoidal) add_positional(x, pos);
}

}  // namespace

KvCache::KvCache(const ModelConfig& config)
    : d_model_(config.d_model),
      capacity_(config.max_seq_len),
      keys_(config.n_layers, std::vector<float>(config.max_seq_len * config.d_model)),
      values_(config.n_layers, std::vector<float>(config.max_seq_len * config.d_model)) {}

std::span<float> KvCache::key(std::size_t layer, std::size_t pos) { return {keys_[layer].data() + pos * d_model_, d_model_}; }
std::span<float> KvCache::value(std::size_t layer, std::size_t pos) {
  return {values_[layer].data() + pos * d_model_, d_model_};
}
std::span<const float> KvCache::key(std::size_t layer, std::size_t pos) const {
  return {keys_[layer].data() + pos * d_model_, d_model_};
}
std::span<const float> KvCache::value(std::size_t layer, std::size_t pos) const {
  return {values_[layer].data() + pos * d_model_, d_model_};
}

void KvCache::advance() {
  if (length_ >= capacity_) throw CacheOverflowError("KV cache full at " + std::to_string(capacity_) + " positions");
  ++length_;
}

Decoder::Decoder(const ModelWeights& weights) : w_(weights) {
  const auto& c = w_.config;
  x_.resize(c.d_model);
  xn_.resize(c.d_model);
  q_.resize(c.d_model);
  attn_.resize(c.d_model);
  proj_.resize(c.d_model);
  ffn_out_.resize(c.d_model);
  hidden_.resize(c.d_ff);
  scores_.resize(c.max_seq_len);
  logits_.resize(c.vocab_size);
}

std::span<const float> Decoder::step(TokenId token, KvCache& cache, FfnStrategy* ffn, PrefillTrace* trace) {
  const auto& c = w_.config;
  const auto& k = simd::kernels();
  const std::size_t pos = cache.length();
  if (pos >= cache.capacity()) {
    throw CacheOverflowError("sequence exceeds max_seq_len (" + std::to_string(c.max_seq_len) + ")");
  }
  const std::size_t hd = c.head_dim();
  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  const auto eps = static_cast<float>(c.rms_eps);

  embed_token(w_, token, pos, x_);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const LayerWeights& lw = w_.layers[l];
    rms_norm_into(x_, lw.norm1, eps, xn_);
    matvec_into(lw.attn_q, xn_, q_);
    matvec_into(lw.attn_k, xn_, cache.key(l, pos));
    matvec_into(lw.attn_v, xn_, cache.value(l, pos));

    std::fill(attn_.begin(), attn_.end(), 0.0f);
    for (std::size_t h = 0; h < c.n_heads; ++h) {
      const std::size_t off = h * hd;
      std::span<float> scores(scores_.data(), pos + 1);
      for (std::size_t j = 0; j <= pos; ++j) scores[j] = k.dot(q_.data() + off, cache.key(l, j).data() + off, hd) * scale;
      softmax_inplace(scores);
      for (std::size_t j = 0; j <= pos; ++j) k.axpy(scores[j], cache.value(l, j).data() + off, attn_.data() + off, hd);
    }
    matvec_into(lw.attn_o, attn_, proj_);
    for (std::size_t i = 0; i < c.d_model; ++i) x_[i] += proj_[i];

    rms_norm_into(x_, lw.norm2, eps, xn_);
    if (ffn != nullptr) {
      ffn->forward(w_, l, xn_, ffn_out_);
    } else {
      dense_ffn(lw, c.activation, xn_, ffn_out_, hidden_);
      if (trace != nullptr) trace->record(l, xn_, hidden_);
    }
    for (std::size_t i = 0; i < c.d_model; ++i) x_[i] += ffn_out_[i];
  }
  cache.advance();

  rms_norm_into(x_, w_.final_norm, eps, xn_);
  matvec_into(w_.lm_head, xn_, logits_);
  return logits_;
}

PrefillResult prefill(const ModelWeights& weights, std::span<const TokenId> prompt, bool record_trace) {
  const auto& c = weights.config;
  if (prompt.empty()) throw ContractError("prefill: empty prompt");
  if (prompt.size() > c.max_seq_len) {
    throw ContractError("prefill: prompt length " + std::to_string(prompt.size()) + " exceeds max_seq_len " +
                        std::to_string(c.max_seq_len));
  }
  PrefillResult result{KvCache(c), {}, record_trace ? PrefillTrace(c.n_layers, c.d_model, c.d_ff) : PrefillTrace{}};
  Decoder decoder(weights);
  std::span<const float> logits;
  for (const TokenId t : prompt) logits = decoder.step(t, result.cache, nullptr, record_trace ? &result.trace : nullptr);
  result.logits.assign(logits.begin(), logits.end());
  return result;
}

TokenId argmax_token(std::span<const float> logits) {
  if (logits.empty()) throw ContractError("argmax over empty logits");
  // max_element returns the first maximum.
  return static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<Vector> reference_forward(const ModelWeights& weights, std::span<const TokenId> tokens) {
  const auto& c = weights.config;
  if (tokens.empty() || tokens.size() > c.max_seq_len) throw ContractError("reference_forward: bad sequence length");
  const std::size_t n = tokens.size();
  const std::size_t dm = c.d_model;
  const std::size_t hd = c.head_dim();
  const auto eps = static_cast<float>(c.rms_eps);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  std::vector<Vector> hs(n, Vector(dm));
  for (std::size_t t = 0; t < n; ++t) embed_token(weights, tokens[t], t, hs[t]);

  for (const LayerWeights& lw : weights.layers) {
    std::vector<Vector> q(n), kk(n), v(n);
    for (std::size_t t = 0; t < n; ++t) {
      const Vector xn = rms_norm(hs[t], lw.norm1, eps);
      q[t] = matvec(lw.attn_q, xn);
      kk[t] = matvec(lw.attn_k, xn);
      v[t] = matvec(lw.attn_v, xn);
    }
    for (std::size_t t = 0; t < n; ++t) {
      Vector mixed(dm, 0.0f);
      for (std::size_t h = 0; h < c.n_heads; ++h) {
        const std::size_t off = h * hd;
        std::vector<double> p(t + 1);
        for (std::size_t j = 0; j <= t; ++j) {
          double s = 0.0;
          for (std::size_t d = 0; d < hd; ++d) s += static_cast<double>(q[t][off + d]) * kk[j][off + d];
          p[j] = s * scale;
        }
        const double peak = *std::max_element(p.begin(), p.end());
        double total = 0.0;
        for (double& e : p) total += (e = std::exp(e - peak));
        for (std::size_t j = 0; j <= t; ++j) {
          for (std::size_t d = 0; d < hd; ++d) mixed[off + d] += static_cast<float>(p[j] / total) * v[j][off + d];
        }
      }
      const Vector proj = matvec(lw.attn_o, mixed);
      for (std::size_t i = 0; i < dm; ++i) hs[t][i] += proj[i];
    }
    for (std::size_t t = 0; t < n; ++t) {
      const Vector xn = rms_norm(hs[t], lw.norm2, eps);
      Vector out(dm);
      dense_ffn(lw, c.activation, xn, out);
      for (std::size_t i = 0; i < dm; ++i) hs[t][i] += out[i];
    }
  }

  std::vector<Vector> logits(n);
  for (std::size_t t = 0; t < n; ++t) logits[t] = matvec(weights.lm_head, rms_norm(hs[t], weights.final_norm, eps));
  return logits;
}

}  // namespace tda
