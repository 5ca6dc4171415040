#pragma once

// The four FFN execution strategies. Dense lives in ffn.hpp.
//   TT       per-token: full gate/up, drop neurons below epsilon, sliced down.
//   Griffin  per-sequence: fixed top-k neurons from prompt statistics.
//   TDA      per-sequence: prompt magnitudes against layer-wise thresholds.
// Griffin and TDA pack the surviving rows/columns once per sequence and
// never touch masked weights during generation.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tda/ffn.hpp"
#include "tda/sparsity.hpp"

namespace tda {

// Contiguous copy of the active rows of W_gate/W_up and columns of W_down.
class FfnSlice {
 public:
  FfnSlice() = default;
  FfnSlice(const LayerWeights& layer, const NeuronMask& mask);

  std::size_t active_count() const noexcept { return gate_.rows(); }

  void forward(ActivationKind kind, std::span<const float> x, std::span<float> out, std::vector<float>& hidden) const;

 private:
  Matrix gate_;
  Matrix up_;
  Matrix down_;
};

class ThresholdTruncationFfn final : public FfnStrategy {
 public:
  explicit ThresholdTruncationFfn(ThresholdProfile profile);

  std::string name() const override { return "tt"; }
  void forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
               std::span<float> out) override;

  const ThresholdProfile& profile() const noexcept { return profile_; }

 private:
  ThresholdProfile profile_;
  std::vector<float> hidden_;
  std::vector<float> magnitudes_;
  std::vector<std::int32_t> active_;
};

// Common base for strategies that fix one mask set per sequence.
class MaskedFfn : public FfnStrategy {
 public:
  void begin_sequence(const ModelWeights& weights, const PrefillTrace& trace) override;
  void forward(const ModelWeights& weights, std::size_t layer, std::span<const float> x,
               std::span<float> out) override;

  const LayerMaskSet& masks() const noexcept { return masks_; }

 protected:
  virtual LayerMaskSet build_masks(const ModelWeights& weights, const PrefillTrace& trace) const = 0;
  void install(const ModelWeights& weights, LayerMaskSet masks);

 private:
  LayerMaskSet masks_;
  std::vector<FfnSlice> slices_;
  std::vector<float> hidden_;
};

class TdaFfn final : public MaskedFfn {
 public:
  explicit TdaFfn(ThresholdProfile profile);
  std::string name() const override { return "tda"; }
  const ThresholdProfile& profile() const noexcept { return profile_; }

 protected:
  LayerMaskSet build_masks(const ModelWeights& weights, const PrefillTrace& trace) const override;

 private:
  ThresholdProfile profile_;
};

class GriffinFfn final : public MaskedFfn {
 public:
  explicit GriffinFfn(double sparsity, Aggregation agg = Aggregation::flocking);
  std::string name() const override { return "griffin"; }

 protected:
  LayerMaskSet build_masks(const ModelWeights& weights, const PrefillTrace& trace) const override;

 private:
  double sparsity_;
  Aggregation aggregation_;
};

// Caller-supplied masks, ignoring the prompt. Used for oracles and probes.
class FixedMaskFfn final : public MaskedFfn {
 public:
  explicit FixedMaskFfn(LayerMaskSet masks);
  std::string name() const override { return "fixed_mask"; }

 protected:
  LayerMaskSet build_masks(const ModelWeights& weights, const PrefillTrace& trace) const override;

 private:
  LayerMaskSet fixed_;
};

enum class StrategyKind { dense, tt, griffin, tda };

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::dense;
  std::optional<ThresholdProfile> profile;  // tt, tda
  std::optional<double> sparsity;           // griffin
};

// Throws ContractError when a prerequisite is missing.
void validate(const StrategySpec& spec);
std::unique_ptr<FfnStrategy> make_strategy(const StrategySpec& spec);

}  // namespace tda
