#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tda/bench.hpp"
#include "tda/error.hpp"
#include "tda/simd.hpp"

namespace tda::bench {

namespace {

// Wraps a strategy and measures every FFN call against the dense FFN.
class ProbeFfn final : public FfnStrategy {
 public:
  ProbeFfn(FfnStrategy& inner, bool record_inputs) : inner_(inner), record_inputs_(record_inputs) {}

  std::string name() const override { return inner_.name(); }
  void begin_sequence(const ModelWeights& weights, const PrefillTrace& trace) override {
    inner_.begin_sequence(weights, trace);
  }

  void forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
               std::span<float> out) override {
    inner_.forward(weights, layer, x, out);
    dense_.resize(out.size());
    dense_ffn(weights.layers[layer], weights.config.activation, x, dense_);
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = static_cast<double>(out[i]) - dense_[i];
      diff += d * d;
      ref += static_cast<double>(dense_[i]) * dense_[i];
    }
    FfnCallRecord rec;
    rec.step = step;
    rec.layer = layer;
    rec.relative_error = ref == 0.0 ? (diff == 0.0 ? 0.0 : INFINITY) : std::sqrt(diff / ref);
    if (record_inputs_) rec.input.assign(x.begin(), x.end());
    calls.push_back(std::move(rec));
  }

  std::size_t step = 0;
  std::vector<FfnCallRecord> calls;

 private:
  FfnStrategy& inner_;
  bool record_inputs_;
  Vector dense_;
};

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void BenchSpec::validate(const ModelConfig& config) const {
  if (strategies.empty()) throw ContractError("bench: no strategies selected");
  if (repetitions < 3) throw ContractError("bench: repetitions must be >= 3");
  if (prompt_length == 0) throw ContractError("bench: prompt length must be >= 1");
  if (prompt_length + new_tokens > config.max_seq_len) {
    throw ContractError("bench: prompt length + new tokens exceeds max_seq_len");
  }
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw ContractError("bench: sparsity must lie in (0, 1)");
  if (!(cett_target > 0.0 && cett_target < 1.0)) throw ContractError("bench: cett_target must lie in (0, 1)");
}

const StrategyReport* BenchReport::find(std::string_view strategy) const {
  for (const auto& r : rows) {
    if (r.strategy == strategy) return &r;
  }
  return nullptr;
}

std::vector<TokenId> bench_prompt(std::size_t length, std::uint64_t seed) {
  std::vector<TokenId> prompt{kBosToken};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> printable(32, 126);
  while (prompt.size() < length) prompt.push_back(printable(rng));
  prompt.resize(length);
  return prompt;
}

FidelityResult fidelity_probe(const ModelWeights& weights, std::span<const TokenId> prompt, FfnStrategy& a,
                              FfnStrategy& b, std::size_t steps, bool record_inputs) {
  const auto& c = weights.config;
  if (prompt.size() + steps > c.max_seq_len) throw CacheOverflowError("fidelity_probe: sequence exceeds max_seq_len");
  PrefillResult pre = prefill(weights, prompt, true);
  ProbeFfn probe(b, record_inputs);
  a.begin_sequence(weights, pre.trace);
  probe.begin_sequence(weights, pre.trace);

  KvCache cache_a = pre.cache;
  KvCache& cache_b = pre.cache;
  Decoder dec_a(weights), dec_b(weights);
  Vector logits_a = pre.logits, logits_b = pre.logits;

  FidelityResult r;
  std::size_t agree = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    probe.step = step;
    const std::size_t first_call = probe.calls.size();
    if (step > 0) {
      const TokenId fed = r.tokens_a.back();
      const auto la = dec_a.step(fed, cache_a, &a);
      logits_a.assign(la.begin(), la.end());
      const auto lb = dec_b.step(fed, cache_b, &probe);
      logits_b.assign(lb.begin(), lb.end());
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < logits_a.size(); ++i) gap = std::max(gap, std::fabs(static_cast<double>(logits_a[i]) - logits_b[i]));
    r.max_abs_logit_gap.push_back(gap);
    double err = 0.0;
    for (std::size_t k = first_call; k < probe.calls.size(); ++k) err += probe.calls[k].relative_error;
    const std::size_t n_calls = probe.calls.size() - first_call;
    r.ffn_relative_error.push_back(n_calls ? err / static_cast<double>(n_calls) : 0.0);
    r.tokens_a.push_back(argmax_token(logits_a));
    r.tokens_b.push_back(argmax_token(logits_b));
    agree += r.tokens_a.back() == r.tokens_b.back();
  }
  r.token_agreement = steps ? static_cast<double>(agree) / static_cast<double>(steps) : 1.0;
  r.calls = std::move(probe.calls);
  return r;
}

BenchReport run_bench(const ModelWeights& weights, const BenchSpec& spec) {
  const auto& c = weights.config;
  spec.validate(c);
  const std::vector<TokenId> prompt = bench_prompt(spec.prompt_length, spec.seed);

  const PrefillResult pre = prefill(weights, prompt, true);
  ThresholdProfile profile;
  if (spec.profile) {
    profile = *spec.profile;
    profile.validate(c.n_layers);
  } else {
    ThresholdSearchOptions opts;
    opts.cett_target = spec.cett_target;
    profile = calibrate_profile(weights, std::span(&pre.trace, 1), opts, "bench-prompt");
  }
  const bool scalable = std::any_of(profile.per_layer_epsilon.begin(), profile.per_layer_epsilon.end(),
                                    [](double e) { return e > 0.0; });
  const ThresholdProfile tda_profile = spec.match_tda_sparsity && scalable
                                           ? fit_profile_to_active_fraction(pre.trace, profile, weights, 1.0 - spec.sparsity)
                                           : profile;

  auto make = [&](StrategyKind kind) {
    StrategySpec s{kind, std::nullopt, std::nullopt};
    if (kind == StrategyKind::tt) s.profile = profile;
    if (kind == StrategyKind::tda) s.profile = tda_profile;
    if (kind == StrategyKind::griffin) s.sparsity = spec.sparsity;
    return make_strategy(s);
  };

  GenerationRequest request;
  request.prompt = prompt;
  request.max_new_tokens = spec.new_tokens;

  BenchReport report;
  report.model = spec.model_path.empty() ? std::string("in-memory") : spec.model_path.filename().string();
  report.n_layers = c.n_layers;
  report.d_model = c.d_model;
  report.d_ff = c.d_ff;
  report.prompt_length = spec.prompt_length;
  report.new_tokens = spec.new_tokens;
  report.repetitions = spec.repetitions;
  report.warmup = spec.warmup;
  report.seed = spec.seed;
  report.sparsity = spec.sparsity;
  report.kernels = std::string(simd::kernels().name);
  report.tda_epsilon = tda_profile.per_layer_epsilon;

  std::vector<StrategyReport> rows(spec.strategies.size());
  std::vector<std::vector<TokenId>> tokens(spec.strategies.size());
  for (std::size_t s = 0; s < spec.strategies.size(); ++s) rows[s].strategy = to_string(spec.strategies[s]);

  for (std::size_t w = 0; w < spec.warmup; ++w) {
    for (const StrategyKind kind : spec.strategies) {
      auto strategy = make(kind);
      generate(weights, request, *strategy);
    }
  }
  // Strategies are interleaved within each repetition so slow drift in the
  // machine state spreads evenly.
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    for (std::size_t s = 0; s < spec.strategies.size(); ++s) {
      auto strategy = make(spec.strategies[s]);
      const GenerationResult g = generate(weights, request, *strategy);
      rows[s].run_seconds.push_back(g.generation_seconds);
      if (rep == 0) {
        tokens[s] = g.tokens;
        rows[s].ffn_macs = g.generation_counters.ffn_macs;
        rows[s].ffn_calls = g.generation_counters.calls;
        rows[s].mean_active_fraction = g.generation_counters.active_fraction();
      }
    }
  }

  std::vector<TokenId> dense_tokens;
  if (auto it = std::find(spec.strategies.begin(), spec.strategies.end(), StrategyKind::dense); it != spec.strategies.end()) {
    dense_tokens = tokens[static_cast<std::size_t>(it - spec.strategies.begin())];
  } else {
    DenseFfn dense;
    dense_tokens = generate(weights, request, dense).tokens;
  }

  for (std::size_t s = 0; s < spec.strategies.size(); ++s) {
    StrategyReport& r = rows[s];
    r.median_seconds = median_of(r.run_seconds);
    r.mean_seconds = std::accumulate(r.run_seconds.begin(), r.run_seconds.end(), 0.0) / static_cast<double>(r.run_seconds.size());
    double var = 0.0;
    for (const double t : r.run_seconds) var += (t - r.mean_seconds) * (t - r.mean_seconds);
    r.stddev_seconds = std::sqrt(var / static_cast<double>(r.run_seconds.size() - 1));
    r.noisy = r.median_seconds > 0.0 && r.stddev_seconds / r.median_seconds > spec.noise_limit;

    std::size_t agree = 0;
    for (std::size_t i = 0; i < dense_tokens.size(); ++i) agree += tokens[s][i] == dense_tokens[i];
    r.token_agreement = dense_tokens.empty() ? 1.0 : static_cast<double>(agree) / static_cast<double>(dense_tokens.size());

    DenseFfn reference;
    auto probed = make(spec.strategies[s]);
    const FidelityResult fid = fidelity_probe(weights, prompt, reference, *probed, spec.new_tokens);
    double err = 0.0;
    for (std::size_t i = 1; i < fid.ffn_relative_error.size(); ++i) err += fid.ffn_relative_error[i];
    r.mean_ffn_relative_error = fid.ffn_relative_error.size() > 1 ? err / static_cast<double>(fid.ffn_relative_error.size() - 1) : 0.0;
  }
  if (const auto it = std::find(spec.strategies.begin(), spec.strategies.end(), StrategyKind::dense); it != spec.strategies.end()) {
    const double dense_median = rows[static_cast<std::size_t>(it - spec.strategies.begin())].median_seconds;
    for (auto& r : rows) r.reduction_vs_dense = dense_median > 0.0 ? (dense_median - r.median_seconds) / dense_median : 0.0;
  }
  report.rows = std::move(rows);
  return report;
}

BenchReport run_bench(const BenchSpec& spec) {
  const ModelConfig config = read_config(default_config_path(spec.model_path));
  const ModelWeights weights = load_weights(spec.model_path, config);
  return run_bench(weights, spec);
}

}  // namespace tda::bench
