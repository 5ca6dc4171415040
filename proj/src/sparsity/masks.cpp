#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tda/error.hpp"
#include "tda/sparsity.hpp"

namespace tda {

std::size_t LayerMaskSet::active_count(std::size_t layer) const {
  const NeuronMask& m = layers.at(layer);
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

LayerMaskSet LayerMaskSet::all(std::size_t n_layers, std::size_t d_ff, bool value) {
  return LayerMaskSet{std::vector<NeuronMask>(n_layers, NeuronMask(d_ff, value))};
}

std::vector<double> aggregate_scores(std::span<const Vector> token_magnitudes, Aggregation agg) {
  if (token_magnitudes.empty()) return {};
  const std::size_t d = token_magnitudes.front().size();
  std::vector<double> s(d, 0.0);
  for (const Vector& m : token_magnitudes) {
    if (m.size() != d) throw ContractError("aggregate_scores: ragged magnitude rows");
    if (agg == Aggregation::l2) {
      for (std::size_t i = 0; i < d; ++i) s[i] += static_cast<double>(m[i]) * m[i];
      continue;
    }
    double norm_sq = 0.0;
    for (const float v : m) norm_sq += static_cast<double>(v) * v;
    if (norm_sq == 0.0) continue;
    for (std::size_t i = 0; i < d; ++i) s[i] += static_cast<double>(m[i]) * m[i] / norm_sq;
  }
  if (agg == Aggregation::l2) {
    for (double& v : s) v = std::sqrt(v);
  }
  return s;
}

NeuronMask tda_mask(std::span<const Vector> token_magnitudes, double epsilon, Aggregation agg) {
  if (token_magnitudes.empty()) throw ContractError("tda_mask: no prompt tokens");
  const std::vector<double> s = aggregate_scores(token_magnitudes, agg);
  const double s_max = *std::max_element(s.begin(), s.end());
  NeuronMask mask(s.size(), true);
  if (s_max == 0.0) return mask;  // degenerate prompt: stay dense

  std::size_t live_tokens = 0;
  double norm_sum = 0.0;
  for (const Vector& m : token_magnitudes) {
    double norm_sq = 0.0;
    for (const float v : m) norm_sq += static_cast<double>(v) * v;
    if (norm_sq > 0.0) {
      ++live_tokens;
      norm_sum += std::sqrt(norm_sq);
    }
  }
  const auto t = static_cast<double>(live_tokens);
  double s_cut = 0.0;
  if (agg == Aggregation::flocking) {
    const double ratio = epsilon / (norm_sum / t);
    s_cut = t * ratio * ratio;
  } else {
    s_cut = std::sqrt(t) * epsilon;
  }
  const double r_cut = s_cut / s_max;
  for (std::size_t i = 0; i < s.size(); ++i) mask[i] = s[i] / s_max >= r_cut;
  return mask;
}

LayerMaskSet build_tda_masks(const PrefillTrace& trace, const ThresholdProfile& profile, const ModelWeights& weights) {
  if (trace.n_tokens() == 0) throw ContractError("build_tda_masks: empty prefill trace");
  profile.validate(weights.config.n_layers);
  LayerMaskSet masks;
  masks.layers.reserve(weights.config.n_layers);
  for (std::size_t l = 0; l < weights.config.n_layers; ++l) {
    const NeuronMagnitudes mags = trace_magnitudes(trace, weights, l, profile.magnitude);
    masks.layers.push_back(tda_mask(mags.per_token, profile.per_layer_epsilon[l], profile.aggregation));
  }
  return masks;
}

std::size_t griffin_keep_count(std::size_t d_ff, double sparsity) {
  if (!(sparsity > 0.0 && sparsity < 1.0)) throw ContractError("griffin sparsity must lie in (0, 1)");
  const double exact = (1.0 - sparsity) * static_cast<double>(d_ff);
  // Absorb representation error such as (1 - 0.7) * 10 = 3.0000000000000004.
  const auto keep = static_cast<std::size_t>(std::ceil(exact - 1e-9 * static_cast<double>(d_ff)));
  return std::clamp<std::size_t>(keep, 1, d_ff);
}

NeuronMask top_k_mask(std::span<const double> scores, std::size_t keep) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  NeuronMask mask(scores.size(), false);
  for (std::size_t k = 0; k < std::min(keep, order.size()); ++k) mask[order[k]] = true;
  return mask;
}

LayerMaskSet build_griffin_masks(const PrefillTrace& trace, double sparsity, const ModelWeights& weights,
                                 Aggregation agg, MagnitudeDef def) {
  if (trace.n_tokens() == 0) throw ContractError("build_griffin_masks: empty prefill trace");
  const std::size_t keep = griffin_keep_count(weights.config.d_ff, sparsity);
  LayerMaskSet masks;
  for (std::size_t l = 0; l < weights.config.n_layers; ++l) {
    const NeuronMagnitudes mags = trace_magnitudes(trace, weights, l, def);
    masks.layers.push_back(top_k_mask(aggregate_scores(mags.per_token, agg), keep));
  }
  return masks;
}

SparsityReport sparsity_report(const LayerMaskSet& masks) {
  SparsityReport r;
  if (masks.layers.empty()) return r;
  double total = 0.0;
  for (std::size_t l = 0; l < masks.n_layers(); ++l) {
    const std::size_t d = masks.layers[l].size();
    const double frac = d == 0 ? 1.0 : static_cast<double>(masks.active_count(l)) / static_cast<double>(d);
    r.per_layer_active.push_back(frac);
    total += frac;
  }
  r.mean_active = total / static_cast<double>(masks.n_layers());
  return r;
}

std::string masks_to_hex(const LayerMaskSet& masks) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t l = 0; l < masks.n_layers(); ++l) {
    const NeuronMask& m = masks.layers[l];
    out += std::to_string(l) + ":" + std::to_string(m.size()) + ":";
    for (std::size_t byte = 0; byte * 8 < m.size(); ++byte) {
      unsigned v = 0;
      for (std::size_t b = 0; b < 8 && byte * 8 + b < m.size(); ++b) {
        if (m[byte * 8 + b]) v |= 1u << b;
      }
      out.push_back(kDigits[v >> 4]);
      out.push_back(kDigits[v & 0xF]);
    }
    out.push_back('\n');
  }
  return out;
}

LayerMaskSet masks_from_hex(std::string_view text) {
  LayerMaskSet masks;
  std::istringstream in{std::string(text)};
  std::string line;
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw DataError("mask dump: bad hex digit");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(':');
    const auto c2 = line.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) throw DataError("mask dump: malformed line");
    if (std::stoul(line.substr(0, c1)) != masks.n_layers()) throw DataError("mask dump: layers out of order");
    const std::size_t d = std::stoul(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string hex = line.substr(c2 + 1);
    if (hex.size() != 2 * ((d + 7) / 8)) throw DataError("mask dump: bitmap length mismatch");
    NeuronMask m(d, false);
    for (std::size_t i = 0; i < d; ++i) {
      const unsigned byte = nibble(hex[2 * (i / 8)]) << 4 | nibble(hex[2 * (i / 8) + 1]);
      m[i] = (byte >> (i % 8)) & 1u;
    }
    masks.layers.push_back(std::move(m));
  }
  return masks;
}

ThresholdProfile fit_profile_to_active_fraction(const PrefillTrace& trace, const ThresholdProfile& profile,
                                                const ModelWeights& weights, double target_active_fraction) {
  if (!(target_active_fraction > 0.0 && target_active_fraction <= 1.0)) {
    throw ContractError("target active fraction must lie in (0, 1]");
  }
  profile.validate(weights.config.n_layers);
  if (std::all_of(profile.per_layer_epsilon.begin(), profile.per_layer_epsilon.end(), [](double e) { return e == 0.0; })) {
    throw ContractError("cannot scale an all-zero threshold profile");
  }
  // Magnitudes do not depend on the scale; compute them once.
  std::vector<NeuronMagnitudes> mags;
  for (std::size_t l = 0; l < weights.config.n_layers; ++l) mags.push_back(trace_magnitudes(trace, weights, l, profile.magnitude));

  auto scaled = [&](double scale) {
    ThresholdProfile p = profile;
    for (double& e : p.per_layer_epsilon) e *= scale;
    return p;
  };
  auto active_at = [&](double scale) {
    LayerMaskSet masks;
    for (std::size_t l = 0; l < mags.size(); ++l) {
      masks.layers.push_back(tda_mask(mags[l].per_token, profile.per_layer_epsilon[l] * scale, profile.aggregation));
    }
    return sparsity_report(masks).mean_active;
  };

  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 64 && active_at(hi) > target_active_fraction; ++i) hi *= 2.0;
  // Smallest scale whose mean active fraction is at or below the target.
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (active_at(mid) > target_active_fraction) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double below = active_at(hi);
  const double above = active_at(lo);
  return scaled(target_active_fraction - below <= above - target_active_fraction ? hi : lo);
}

}  // namespace tda
