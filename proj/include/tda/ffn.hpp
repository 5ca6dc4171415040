#pragma once

// FFN execution strategies plug into the decoder through FfnStrategy. The
// prefill phase always runs the FFN dense and records a PrefillTrace that
// mask-building strategies consume before the generation phase starts.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tda/model.hpp"

namespace tda {

// Per-layer, per-token record of the FFN input x (after norm2) and the gated
// hidden vector h = act(W_gate x) ⊙ (W_up x).
class PrefillTrace {
 public:
  PrefillTrace() = default;
  PrefillTrace(std::size_t n_layers, std::size_t d_model, std::size_t d_ff);

  std::size_t n_layers() const noexcept { return inputs_.size(); }
  std::size_t n_tokens() const noexcept { return n_tokens_; }
  std::size_t d_model() const noexcept { return d_model_; }
  std::size_t d_ff() const noexcept { return d_ff_; }

  std::span<const float> ffn_input(std::size_t layer, std::size_t token) const;
  std::span<const float> hidden(std::size_t layer, std::size_t token) const;

  // Layers are appended in order for each token; the token count advances
  // when the last layer is recorded.
  void record(std::size_t layer, std::span<const float> x, std::span<const float> h);

  friend bool operator==(const PrefillTrace&, const PrefillTrace&) = default;

 private:
  std::size_t d_model_ = 0;
  std::size_t d_ff_ = 0;
  std::size_t n_tokens_ = 0;
  std::vector<std::vector<float>> inputs_;
  std::vector<std::vector<float>> hidden_;
};

struct FfnCounters {
  std::uint64_t calls = 0;
  // Multiply-adds spent in the gate, up and down projections.
  std::uint64_t ffn_macs = 0;
  // Per-neuron work for online mask decisions (TT only).
  std::uint64_t decision_ops = 0;
  std::uint64_t active_neurons = 0;
  std::uint64_t total_neurons = 0;

  double active_fraction() const noexcept {
    return total_neurons == 0 ? 1.0 : static_cast<double>(active_neurons) / static_cast<double>(total_neurons);
  }
};

class FfnStrategy {
 public:
  virtual ~FfnStrategy() = default;

  virtual std::string name() const = 0;

  // Called once after prefill (and again on a mask refresh).
  virtual void begin_sequence(const ModelWeights& /*weights*/, const PrefillTrace& /*trace*/) {}

  // out = FFN_layer(x); x.size() == d_model, out.size() == d_model.
  virtual void forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
                       std::span<float> out) = 0;

  const FfnCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }

 protected:
  FfnCounters counters_;
};

// Gated FFN over every neuron. When hidden is non-empty (size d_ff) the gated
// vector is written there.
void dense_ffn(const LayerWeights& layer, ActivationKind kind, std::span<const float> x, std::span<float> out,
               std::span<float> hidden = {});

class DenseFfn final : public FfnStrategy {
 public:
  std::string name() const override { return "dense"; }
  void forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
               std::span<float> out) override;

 private:
  std::vector<float> hidden_;
};

}  // namespace tda
