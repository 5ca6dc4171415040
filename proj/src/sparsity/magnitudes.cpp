#include <cmath>
#include <string>

#include "tda/error.hpp"
#include "tda/simd.hpp"
#include "tda/sparsity.hpp"

namespace tda {

std::string to_string(MagnitudeDef def) { return def == MagnitudeDef::output_norm ? "output_norm" : "gated_only"; }
std::string to_string(Aggregation agg) { return agg == Aggregation::flocking ? "flocking" : "l2"; }
std::string to_string(CettConstraint c) { return c == CettConstraint::mean ? "mean" : "max"; }

MagnitudeDef parse_magnitude_def(std::string_view s) {
  if (s == "output_norm") return MagnitudeDef::output_norm;
  if (s == "gated_only") return MagnitudeDef::gated_only;
  throw ContractError("unknown magnitude definition '" + std::string(s) + "'");
}

Aggregation parse_aggregation(std::string_view s) {
  if (s == "flocking") return Aggregation::flocking;
  if (s == "l2") return Aggregation::l2;
  throw ContractError("unknown aggregation '" + std::string(s) + "'");
}

CettConstraint parse_cett_constraint(std::string_view s) {
  if (s == "mean") return CettConstraint::mean;
  if (s == "max") return CettConstraint::max;
  throw ContractError("unknown CETT constraint '" + std::string(s) + "'");
}

Vector gated_hidden(const LayerWeights& layer, ActivationKind kind, std::span<const float> x) {
  if (x.size() != layer.ffn_gate.cols()) throw ContractError("gated_hidden: x length != d_model");
  const auto& k = simd::kernels();
  Vector h(layer.ffn_gate.rows());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const float g = k.dot(layer.ffn_gate.row(i).data(), x.data(), x.size());
    const float u = k.dot(layer.ffn_up.row(i).data(), x.data(), x.size());
    h[i] = activate(kind, g) * u;
  }
  return h;
}

void magnitudes_from_hidden(const LayerWeights& layer, std::span<const float> hidden, MagnitudeDef def,
                            std::span<float> out) {
  if (hidden.size() != layer.down_col_norms.size() || out.size() != hidden.size()) {
    throw ContractError("magnitudes_from_hidden: length != d_ff");
  }
  if (def == MagnitudeDef::gated_only) {
    for (std::size_t i = 0; i < hidden.size(); ++i) out[i] = std::fabs(hidden[i]);
  } else {
    for (std::size_t i = 0; i < hidden.size(); ++i) out[i] = std::fabs(hidden[i]) * layer.down_col_norms[i];
  }
}

Vector neuron_magnitudes(const LayerWeights& layer, std::span<const float> x, ActivationKind kind, MagnitudeDef def) {
  const Vector h = gated_hidden(layer, kind, x);
  Vector m(h.size());
  magnitudes_from_hidden(layer, h, def, m);
  return m;
}

NeuronMagnitudes trace_magnitudes(const PrefillTrace& trace, const ModelWeights& weights, std::size_t layer,
                                  MagnitudeDef def) {
  NeuronMagnitudes out;
  out.layer = layer;
  out.per_token.resize(trace.n_tokens(), Vector(trace.d_ff()));
  for (std::size_t t = 0; t < trace.n_tokens(); ++t) {
    magnitudes_from_hidden(weights.layers.at(layer), trace.hidden(layer, t), def, out.per_token[t]);
  }
  return out;
}

double cett(const LayerWeights& layer, std::span<const float> x, ActivationKind kind, double epsilon,
            MagnitudeDef def) {
  if (!(epsilon >= 0.0)) throw ContractError("cett: epsilon must be >= 0");
  const Vector h = gated_hidden(layer, kind, x);
  Vector mags(h.size());
  magnitudes_from_hidden(layer, h, def, mags);

  Vector tail(h.size(), 0.0f);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (mags[i] < epsilon) tail[i] = h[i];
  }
  const Vector full_out = matvec(layer.ffn_down, h);
  const Vector tail_out = matvec(layer.ffn_down, tail);
  double den = 0.0;
  double num = 0.0;
  for (std::size_t r = 0; r < full_out.size(); ++r) {
    den += static_cast<double>(full_out[r]) * full_out[r];
    num += static_cast<double>(tail_out[r]) * tail_out[r];
  }
  if (den == 0.0) throw UndefinedCettError("cett: FFN output is zero");
  return std::sqrt(num) / std::sqrt(den);
}

}  // namespace tda
