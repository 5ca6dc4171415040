#include "tda/strategies.hpp"

#include <algorithm>

#include "tda/error.hpp"
#include "tda/simd.hpp"

namespace tda {

FfnSlice::FfnSlice(const LayerWeights& layer, const NeuronMask& mask) {
  const std::size_t d_ff = layer.ffn_gate.rows();
  const std::size_t dm = layer.ffn_gate.cols();
  if (mask.size() != d_ff) throw ContractError("FfnSlice: mask length != d_ff");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < d_ff; ++i) {
    if (mask[i]) active.push_back(i);
  }
  const std::size_t k = active.size();
  gate_ = Matrix(k, dm);
  up_ = Matrix(k, dm);
  down_ = Matrix(layer.ffn_down.rows(), k);
  for (std::size_t j = 0; j < k; ++j) {
    std::copy_n(layer.ffn_gate.row(active[j]).begin(), dm, gate_.row(j).begin());
    std::copy_n(layer.ffn_up.row(active[j]).begin(), dm, up_.row(j).begin());
  }
  for (std::size_t r = 0; r < down_.rows(); ++r) {
    const auto src = layer.ffn_down.row(r);
    auto dst = down_.row(r);
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[active[j]];
  }
}

void FfnSlice::forward(ActivationKind kind, std::span<const float> x, std::span<float> out,
                       std::vector<float>& hidden) const {
  const auto& kern = simd::kernels();
  const std::size_t k = gate_.rows();
  const std::size_t dm = x.size();
  hidden.resize(k);
  // Same per-neuron arithmetic as dense_ffn, so a full slice is bit-identical.
  for (std::size_t j = 0; j < k; ++j) {
    const float g = kern.dot(gate_.row(j).data(), x.data(), dm);
    const float u = kern.dot(up_.row(j).data(), x.data(), dm);
    hidden[j] = activate(kind, g) * u;
  }
  kern.matvec(down_.data().data(), down_.rows(), k, hidden.data(), out.data());
}

ThresholdTruncationFfn::ThresholdTruncationFfn(ThresholdProfile profile) : profile_(std::move(profile)) {}

void ThresholdTruncationFfn::forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
                                     std::span<float> out) {
  const LayerWeights& lw = weights.layers[layer];
  const std::size_t d_ff = weights.config.d_ff;
  const std::size_t dm = weights.config.d_model;
  const auto& kern = simd::kernels();
  const double eps = profile_.per_layer_epsilon.at(layer);

  hidden_.resize(d_ff);
  magnitudes_.resize(d_ff);
  for (std::size_t i = 0; i < d_ff; ++i) {
    const float g = kern.dot(lw.ffn_gate.row(i).data(), x.data(), dm);
    const float u = kern.dot(lw.ffn_up.row(i).data(), x.data(), dm);
    hidden_[i] = activate(weights.config.activation, g) * u;
  }
  magnitudes_from_hidden(lw, hidden_, profile_.magnitude, magnitudes_);
  active_.clear();
  for (std::size_t i = 0; i < d_ff; ++i) {
    if (!(magnitudes_[i] < eps)) active_.push_back(static_cast<std::int32_t>(i));
  }
  const std::size_t n = active_.size();
  if (n == d_ff) {
    kern.matvec(lw.ffn_down.data().data(), dm, d_ff, hidden_.data(), out.data());
  } else {
    for (std::size_t r = 0; r < dm; ++r) out[r] = kern.dot_indexed(lw.ffn_down.row(r).data(), hidden_.data(), active_.data(), n);
  }
  counters_.calls += 1;
  counters_.ffn_macs += 2ull * dm * d_ff + static_cast<std::uint64_t>(dm) * n;
  counters_.decision_ops += d_ff;
  counters_.active_neurons += n;
  counters_.total_neurons += d_ff;
}

void MaskedFfn::begin_sequence(const ModelWeights& weights, const PrefillTrace& trace) {
  install(weights, build_masks(weights, trace));
}

void MaskedFfn::install(const ModelWeights& weights, LayerMaskSet masks) {
  if (masks.n_layers() != weights.config.n_layers) throw ContractError("mask set layer count != n_layers");
  slices_.clear();
  slices_.reserve(masks.n_layers());
  for (std::size_t l = 0; l < masks.n_layers(); ++l) slices_.emplace_back(weights.layers[l], masks.layers[l]);
  masks_ = std::move(masks);
}

void MaskedFfn::forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
                        std::span<float> out) {
  if (slices_.size() != weights.config.n_layers) throw ContractError(name() + ": forward before begin_sequence");
  const FfnSlice& slice = slices_[layer];
  slice.forward(weights.config.activation, x, out, hidden_);
  counters_.calls += 1;
  counters_.ffn_macs += 3ull * weights.config.d_model * slice.active_count();
  counters_.active_neurons += slice.active_count();
  counters_.total_neurons += weights.config.d_ff;
}

TdaFfn::TdaFfn(ThresholdProfile profile) : profile_(std::move(profile)) {}

LayerMaskSet TdaFfn::build_masks(const ModelWeights& weights, const PrefillTrace& trace) const {
  return build_tda_masks(trace, profile_, weights);
}

GriffinFfn::GriffinFfn(double sparsity, Aggregation agg) : sparsity_(sparsity), aggregation_(agg) {
  griffin_keep_count(1, sparsity);  // validates the range
}

LayerMaskSet GriffinFfn::build_masks(const ModelWeights& weights, const PrefillTrace& trace) const {
  return build_griffin_masks(trace, sparsity_, weights, aggregation_);
}

FixedMaskFfn::FixedMaskFfn(LayerMaskSet masks) : fixed_(std::move(masks)) {}

LayerMaskSet FixedMaskFfn::build_masks(const ModelWeights&, const PrefillTrace&) const { return fixed_; }

std::string to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::dense: return "dense";
    case StrategyKind::tt: return "tt";
    case StrategyKind::griffin: return "griffin";
    case StrategyKind::tda: return "tda";
  }
  return "unknown";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "dense") return StrategyKind::dense;
  if (name == "tt") return StrategyKind::tt;
  if (name == "griffin") return StrategyKind::griffin;
  if (name == "tda") return StrategyKind::tda;
  throw ContractError("unknown strategy '" + std::string(name) + "'");
}

void validate(const StrategySpec& spec) {
  switch (spec.kind) {
    case StrategyKind::dense: return;
    case StrategyKind::tt:
    case StrategyKind::tda:
      if (!spec.profile) throw ContractError(to_string(spec.kind) + " requires a threshold profile");
      return;
    case StrategyKind::griffin:
      if (!spec.sparsity) throw ContractError("griffin requires a sparsity fraction");
      if (!(*spec.sparsity > 0.0 && *spec.sparsity < 1.0)) throw ContractError("griffin sparsity must lie in (0, 1)");
      return;
  }
}

std::unique_ptr<FfnStrategy> make_strategy(const StrategySpec& spec) {
  validate(spec);
  switch (spec.kind) {
    case StrategyKind::dense: return std::make_unique<DenseFfn>();
    case StrategyKind::tt: return std::make_unique<ThresholdTruncationFfn>(*spec.profile);
    case StrategyKind::griffin: return std::make_unique<GriffinFfn>(*spec.sparsity);
    case StrategyKind::tda: return std::make_unique<TdaFfn>(*spec.profile);
  }
  return nullptr;
}

}  // namespace tda
