#include "tda/ffn.hpp"

#include "tda/error.hpp"
#include "tda/simd.hpp"

namespace tda {

PrefillTrace::PrefillTrace(std::size_t n_layers, std::size_t d_model, std::size_t d_ff)
    : d_model_(d_model), d_ff_(d_ff), inputs_(n_layers), hidden_(n_layers) {}

std::span<const float> PrefillTrace::ffn_input(std::size_t layer, std::size_t token) const {
  return {inputs_.at(layer).data() + token * d_model_, d_model_};
}

std::span<const float> PrefillTrace::hidden(std::size_t layer, std::size_t token) const {
  return {hidden_.at(layer).data() + token * d_ff_, d_ff_};
}

void PrefillTrace::record(std::size_t layer, std::span<const float> x, std::span<const float> h) {
  if (x.size() != d_model_ || h.size() != d_ff_) throw ContractError("PrefillTrace::record: bad lengths");
  inputs_.at(layer).insert(inputs_[layer].end(), x.begin(), x.end());
  hidden_.at(layer).insert(hidden_[layer].end(), h.begin(), h.end());
  if (layer + 1 == inputs_.size()) ++n_tokens_;
}

void dense_ffn(const LayerWeights& layer, ActivationKind kind, std::span<const float> x, std::span<float> out,
               std::span<float> hidden) {
  const std::size_t d_ff = layer.ffn_gate.rows();
  std::vector<float> local;
  if (hidden.empty()) {
    local.resize(d_ff);
    hidden = local;
  }
  if (x.size() != layer.ffn_gate.cols() || hidden.size() != d_ff || out.size() != layer.ffn_down.rows()) {
    throw ContractError("dense_ffn: dimension mismatch");
  }
  const auto& k = simd::kernels();
  const std::size_t dm = x.size();
  for (std::size_t i = 0; i < d_ff; ++i) {
    const float g = k.dot(layer.ffn_gate.row(i).data(), x.data(), dm);
    const float u = k.dot(layer.ffn_up.row(i).data(), x.data(), dm);
    hidden[i] = activate(kind, g) * u;
  }
  k.matvec(layer.ffn_down.data().data(), layer.ffn_down.rows(), d_ff, hidden.data(), out.data());
}

void DenseFfn::forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
                       std::span<float> out) {
  const std::size_t d_ff = weights.config.d_ff;
  hidden_.resize(d_ff);
  dense_ffn(weights.layers[layer], weights.config.activation, x, out, hidden_);
  counters_.calls += 1;
  counters_.ffn_macs += 3ull * weights.config.d_model * d_ff;
  counters_.active_neurons += d_ff;
  counters_.total_neurons += d_ff;
}

}  // namespace tda
