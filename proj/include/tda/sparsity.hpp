#pragma once

// Neuron-level view of the gated FFN:
//   n_i(x) = h_i(x) * W_down[:, i],   FFN(x) = sum_i n_i(x),
// its tail-truncation error (CETT), per-layer threshold calibration, and the
// prompt-derived neuron masks used by the sequence-level strategies.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tda/ffn.hpp"
#include "tda/model.hpp"

namespace tda {

// output_norm: ‖n_i(x)‖₂ = |h_i|·‖W_down[:, i]‖₂ (the CETT metric).
// gated_only:  |h_i|, ablation only.
enum class MagnitudeDef { output_norm, gated_only };

// How per-token magnitudes of a prompt are reduced to one score per neuron.
// flocking: s_i = Σ_t (m_{t,i} / ‖m_t‖₂)²;  l2: s_i = sqrt(Σ_t m_{t,i}²).
enum class Aggregation { flocking, l2 };

// Whether calibration constrains the mean or the worst-case token CETT.
enum class CettConstraint { mean, max };

std::string to_string(MagnitudeDef def);
std::string to_string(Aggregation agg);
std::string to_string(CettConstraint c);
MagnitudeDef parse_magnitude_def(std::string_view s);
Aggregation parse_aggregation(std::string_view s);
CettConstraint parse_cett_constraint(std::string_view s);

// h = act(W_gate x) ⊙ (W_up x)
Vector gated_hidden(const LayerWeights& layer, ActivationKind kind, std::span<const float> x);

void magnitudes_from_hidden(const LayerWeights& layer, std::span<const float> hidden, MagnitudeDef def,
                            std::span<float> out);

Vector neuron_magnitudes(const LayerWeights& layer, std::span<const float> x, ActivationKind kind,
                         MagnitudeDef def = MagnitudeDef::output_norm);

struct NeuronMagnitudes {
  std::size_t layer = 0;
  std::vector<Vector> per_token;
};

NeuronMagnitudes trace_magnitudes(const PrefillTrace& trace, const ModelWeights& weights, std::size_t layer,
                                  MagnitudeDef def = MagnitudeDef::output_norm);

// ‖Σ_{i∈D} n_i(x)‖₂ / ‖FFN(x)‖₂ with D = {i : magnitude_i < epsilon}.
// Throws UndefinedCettError when FFN(x) is exactly zero.
double cett(const LayerWeights& layer, std::span<const float> x, ActivationKind kind, double epsilon,
            MagnitudeDef def = MagnitudeDef::output_norm);

struct ThresholdSearchOptions {
  double cett_target = 0.2;
  double rel_tol = 1e-3;
  int max_iterations = 60;
  CettConstraint constraint = CettConstraint::mean;
  MagnitudeDef magnitude = MagnitudeDef::output_norm;
};

struct ThresholdSearchResult {
  double epsilon = 0.0;
  // Constraint value (mean or max CETT) at epsilon.
  double cett_at_epsilon = 0.0;
  int iterations = 0;
  std::size_t tokens_used = 0;
  // Feasibility was non-increasing on a uniform grid over [0, max magnitude].
  bool monotone_on_grid = true;
};

// Largest epsilon in [0, max observed magnitude] whose calibration CETT stays
// within the target, by bisection on the feasibility predicate.
ThresholdSearchResult search_threshold(const LayerWeights& layer, ActivationKind kind,
                                       std::span<const Vector> calibration, const ThresholdSearchOptions& options);

struct ThresholdProfile {
  double cett_target = 0.2;
  std::vector<double> per_layer_epsilon;
  MagnitudeDef magnitude = MagnitudeDef::output_norm;
  Aggregation aggregation = Aggregation::flocking;
  CettConstraint constraint = CettConstraint::mean;
  std::size_t n_tokens = 0;
  std::string dataset_tag;

  void validate(std::size_t n_layers) const;
  friend bool operator==(const ThresholdProfile&, const ThresholdProfile&) = default;
};

ThresholdProfile uniform_profile(std::size_t n_layers, double epsilon);

nlohmann::ordered_json to_json(const ThresholdProfile& profile);
ThresholdProfile profile_from_json(const nlohmann::json& j);
void write_profile(const std::filesystem::path& path, const ThresholdProfile& profile);
ThresholdProfile read_profile(const std::filesystem::path& path);

// Runs search_threshold for every layer on the FFN inputs recorded in the
// traces. Layers are searched on up to `threads` workers.
ThresholdProfile calibrate_profile(const ModelWeights& weights, std::span<const PrefillTrace> traces,
                                   const ThresholdSearchOptions& options, const std::string& dataset_tag,
                                   std::size_t threads = 1, std::vector<ThresholdSearchResult>* details = nullptr);

// Masks: true = neuron computed.
using NeuronMask = std::vector<bool>;

struct LayerMaskSet {
  std::vector<NeuronMask> layers;

  std::size_t n_layers() const noexcept { return layers.size(); }
  std::size_t active_count(std::size_t layer) const;
  static LayerMaskSet all(std::size_t n_layers, std::size_t d_ff, bool value);
  friend bool operator==(const LayerMaskSet&, const LayerMaskSet&) = default;
};

std::vector<double> aggregate_scores(std::span<const Vector> token_magnitudes, Aggregation agg);

// Threshold on relative scores R = s / max(s) at the cut implied by epsilon on
// the mean prompt token:
//   flocking: s_cut = T·(ε / mean_t ‖m_t‖₂)²,   l2: s_cut = sqrt(T)·ε
// with T the number of tokens with non-zero magnitudes. All-zero input keeps
// every neuron.
NeuronMask tda_mask(std::span<const Vector> token_magnitudes, double epsilon, Aggregation agg);

LayerMaskSet build_tda_masks(const PrefillTrace& trace, const ThresholdProfile& profile, const ModelWeights& weights);

// ⌈(1 − sparsity)·d_ff⌉
std::size_t griffin_keep_count(std::size_t d_ff, double sparsity);

// Top-`keep` neurons by score, ties to the lower index.
NeuronMask top_k_mask(std::span<const double> scores, std::size_t keep);

LayerMaskSet build_griffin_masks(const PrefillTrace& trace, double sparsity, const ModelWeights& weights,
                                 Aggregation agg = Aggregation::flocking,
                                 MagnitudeDef def = MagnitudeDef::output_norm);

struct SparsityReport {
  std::vector<double> per_layer_active;
  double mean_active = 1.0;
};

SparsityReport sparsity_report(const LayerMaskSet& masks);

// One line per layer: "<layer>:<d_ff>:<hex>", neuron i at bit (i % 8) of byte i / 8.
std::string masks_to_hex(const LayerMaskSet& masks);
LayerMaskSet masks_from_hex(std::string_view text);

// Scales every layer's epsilon by one common factor, found by bisection, so
// that TDA masks built from `trace` reach the requested mean active fraction.
ThresholdProfile fit_profile_to_active_fraction(const PrefillTrace& trace, const ThresholdProfile& profile,
                                                const ModelWeights& weights, double target_active_fraction);

}  // namespace tda
