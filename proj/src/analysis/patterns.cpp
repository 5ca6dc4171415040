#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tda/analysis.hpp"
#include "tda/error.hpp"
#include "tda/runtime.hpp"

namespace tda::analysis {

namespace {

std::vector<bool> binarize(std::span<const float> magnitudes, std::optional<double> threshold) {
  double cut = 0.0;
  if (threshold) {
    cut = *threshold;
  } else {
    const float peak = magnitudes.empty() ? 0.0f : *std::max_element(magnitudes.begin(), magnitudes.end());
    cut = 1e-3 * peak;
  }
  std::vector<bool> active(magnitudes.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) active[i] = magnitudes[i] > cut;
  return active;
}

}  // namespace

SimilarityMetric parse_metric(std::string_view name) {
  if (name == "jaccard") return SimilarityMetric::jaccard;
  if (name == "cosine") return SimilarityMetric::cosine;
  throw ContractError("unknown similarity metric '" + std::string(name) + "'");
}

std::vector<ActivationPattern> extract_pattern(const ModelWeights& weights, std::span<const TokenId> tokens,
                                               PatternMode mode, std::size_t layer,
                                               std::optional<double> report_threshold) {
  if (tokens.empty()) throw ContractError("extract_pattern: no tokens");
  if (layer >= weights.config.n_layers) throw ContractError("extract_pattern: layer out of range");
  std::vector<ActivationPattern> out;
  out.reserve(tokens.size());
  Vector mags(weights.config.d_ff);
  if (mode == PatternMode::per_token) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const PrefillResult run = prefill(weights, tokens.subspan(i, 1));
      magnitudes_from_hidden(weights.layers[layer], run.trace.hidden(layer, 0), MagnitudeDef::output_norm, mags);
      out.push_back({layer, binarize(mags, report_threshold), ActivationPattern::Source::single_token, tokens[i], 0});
    }
  } else {
    const PrefillResult run = prefill(weights, tokens);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      magnitudes_from_hidden(weights.layers[layer], run.trace.hidden(layer, t), MagnitudeDef::output_norm, mags);
      out.push_back({layer, binarize(mags, report_threshold), ActivationPattern::Source::sequence, tokens[t], t});
    }
  }
  return out;
}

double pattern_similarity(const std::vector<bool>& a, const std::vector<bool>& b, SimilarityMetric metric) {
  if (a.size() != b.size()) throw ContractError("pattern_similarity: length mismatch");
  std::size_t both = 0, either = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += a[i] && b[i];
    either += a[i] || b[i];
    na += a[i];
    nb += b[i];
  }
  if (metric == SimilarityMetric::jaccard) {
    return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
  }
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  if (na == nb && both == na) return 1.0;
  return static_cast<double>(both) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

double pattern_similarity(const ActivationPattern& a, const ActivationPattern& b, SimilarityMetric metric) {
  return pattern_similarity(a.active, b.active, metric);
}

std::vector<double> activation_frequency(const std::vector<ActivationPattern>& patterns) {
  if (patterns.empty()) throw ContractError("activation_frequency: no patterns");
  const std::size_t d = patterns.front().active.size();
  std::vector<double> freq(d, 0.0);
  for (const auto& p : patterns) {
    if (p.active.size() != d) throw ContractError("activation_frequency: ragged patterns");
    for (std::size_t i = 0; i < d; ++i) freq[i] += p.active[i] ? 1.0 : 0.0;
  }
  for (double& f : freq) f /= static_cast<double>(patterns.size());
  return freq;
}

double gini(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double total = 0.0, weighted = 0.0;
  const auto n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i];
  }
  return total == 0.0 ? 0.0 : weighted / (n * total);
}

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", value);
  return buf;
}

void flocking_export(const std::vector<ActivationPattern>& patterns, const std::filesystem::path& path) {
  if (patterns.empty()) throw ContractError("flocking_export: no patterns");
  const std::vector<double> freq = activation_frequency(patterns);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (const auto& p : patterns) {
    for (std::size_t i = 0; i < p.active.size(); ++i) out << (i ? "," : "") << (p.active[i] ? '1' : '0');
    out << '\n';
  }
  for (std::size_t i = 0; i < freq.size(); ++i) out << (i ? "," : "") << format_number(freq[i]);
  out << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace tda::analysis
