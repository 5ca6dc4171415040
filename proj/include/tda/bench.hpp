#pragma once

// Generation-phase latency, FFN multiply-add counts and output fidelity for
// the FFN strategies on one model and prompt.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tda/model.hpp"
#include "tda/runtime.hpp"
#include "tda/sparsity.hpp"
#include "tda/strategies.hpp"

namespace tda::bench {

struct BenchSpec {
  std::filesystem::path model_path;  // used by run_bench(spec) only
  std::size_t prompt_length = 128;   // including BOS
  std::size_t new_tokens = 128;
  std::vector<StrategyKind> strategies{StrategyKind::dense, StrategyKind::tt, StrategyKind::griffin,
                                       StrategyKind::tda};
  std::size_t repetitions = 5;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
  // Griffin sparsity; TDA thresholds are rescaled to the same mean sparsity
  // unless match_tda_sparsity is false.
  double sparsity = 0.5;
  bool match_tda_sparsity = true;
  double cett_target = 0.2;
  // Replaces the profile otherwise calibrated on the prompt.
  std::optional<ThresholdProfile> profile;
  double noise_limit = 0.25;

  void validate(const ModelConfig& config) const;
};

struct StrategyReport {
  std::string strategy;
  std::vector<double> run_seconds;
  double median_seconds = 0.0;
  double mean_seconds = 0.0;
  double stddev_seconds = 0.0;
  bool noisy = false;
  std::uint64_t ffn_macs = 0;  // generation phase, one run
  std::uint64_t ffn_calls = 0;
  double mean_active_fraction = 1.0;
  double token_agreement = 1.0;         // vs dense, free-running
  double mean_ffn_relative_error = 0.0; // vs dense, teacher-forced
  double reduction_vs_dense = 0.0;      // (dense - x) / dense on medians
};

struct BenchReport {
  std::string model;
  std::size_t n_layers = 0, d_model = 0, d_ff = 0;
  std::size_t prompt_length = 0, new_tokens = 0, repetitions = 0, warmup = 0;
  std::uint64_t seed = 0;
  double sparsity = 0.0;
  std::string kernels;
  std::vector<double> tda_epsilon;
  std::vector<StrategyReport> rows;

  const StrategyReport* find(std::string_view strategy) const;
};

std::vector<TokenId> bench_prompt(std::size_t length, std::uint64_t seed);

BenchReport run_bench(const ModelWeights& weights, const BenchSpec& spec);
BenchReport run_bench(const BenchSpec& spec);

struct FfnCallRecord {
  std::size_t step = 0;
  std::size_t layer = 0;
  double relative_error = 0.0;
  Vector input;  // filled when inputs are recorded
};

struct FidelityResult {
  std::vector<double> max_abs_logit_gap;  // one per step
  std::vector<double> ffn_relative_error; // per step, mean over layers (0 for step 0)
  std::vector<FfnCallRecord> calls;
  std::vector<TokenId> tokens_a;
  std::vector<TokenId> tokens_b;
  double token_agreement = 1.0;
};

// Runs both strategies in lockstep on strategy A's greedy tokens. Each of B's
// FFN calls is compared with the dense FFN on the same input.
FidelityResult fidelity_probe(const ModelWeights& weights, std::span<const TokenId> prompt, FfnStrategy& a,
                              FfnStrategy& b, std::size_t steps, bool record_inputs = false);

enum class ReportFormat { json, csv, markdown };

ReportFormat parse_report_format(std::string_view name);
std::string render_report(const BenchReport& report, ReportFormat format);
void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path);

nlohmann::ordered_json to_json(const BenchReport& report);
BenchReport report_from_json(const nlohmann::json& j);

}  // namespace tda::bench
