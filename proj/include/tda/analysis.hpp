#pragma once

// Activation-pattern analyses: per-token versus in-sequence neuron patterns,
// flocking statistics, and the 13-sample activation-inertia battery.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tda/model.hpp"
#include "tda/sparsity.hpp"
#include "tda/tokenizer.hpp"

namespace tda::analysis {

enum class PatternMode { per_token, as_sequence };
enum class SimilarityMetric { jaccard, cosine };

SimilarityMetric parse_metric(std::string_view name);

struct ActivationPattern {
  enum class Source { single_token, sequence };

  std::size_t layer = 0;
  std::vector<bool> active;
  Source source = Source::sequence;
  TokenId token = 0;
  std::size_t position = 0;
};

// Binarizes neuron magnitudes at `layer`: active = magnitude > threshold.
// Without a threshold each pattern uses 1e-3 × its own max magnitude.
std::vector<ActivationPattern> extract_pattern(const ModelWeights& weights, std::span<const TokenId> tokens,
                                               PatternMode mode, std::size_t layer,
                                               std::optional<double> report_threshold = std::nullopt);

// jaccard = |a∧b| / |a∨b|, cosine = |a∧b| / sqrt(|a|·|b|); both are 1 when
// a and b are empty.
double pattern_similarity(const ActivationPattern& a, const ActivationPattern& b, SimilarityMetric metric);
double pattern_similarity(const std::vector<bool>& a, const std::vector<bool>& b, SimilarityMetric metric);

struct SimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values.at(i).at(j); }
};

struct BatterySample {
  int index = 0;
  std::string text;
  std::string treatment;
};

// The 13 prompts of the activation-inertia check.
const std::vector<BatterySample>& builtin_battery();
std::vector<BatterySample> read_battery(const std::filesystem::path& path);

struct OrdinalCheck {
  std::string check_id;
  std::string lhs;
  std::string rhs;
  double lhs_value = 0.0;
  double rhs_value = 0.0;
  bool observed = false;  // lhs_value > rhs_value
};

struct BatteryOptions {
  SimilarityMetric metric = SimilarityMetric::jaccard;
  // nullopt: similarity averaged over all layers.
  std::optional<std::size_t> layer;
  // Per-layer binarization thresholds (e.g. a TDA profile's epsilons).
  std::optional<ThresholdProfile> profile;
  // Ordinal checks carry meaning only for trained weights.
  bool pretrained = false;
};

struct InertiaReport {
  SimilarityMatrix matrix;
  std::vector<OrdinalCheck> checks;
  // False when the weights are untrained or the battery is not the 13-sample set.
  bool ordinal_applicable = false;
};

InertiaReport inertia_battery(const ModelWeights& weights, const std::vector<BatterySample>& samples,
                              const BatteryOptions& options = {});

// Ordinal checks a.* through e.* over a 13x13 matrix indexed by sample number - 1.
std::vector<OrdinalCheck> evaluate_ordinal_claims(const SimilarityMatrix& matrix);

void write_similarity_csv(const std::filesystem::path& path, const SimilarityMatrix& matrix);
nlohmann::ordered_json ordinal_report_json(const InertiaReport& report);

std::vector<double> activation_frequency(const std::vector<ActivationPattern>& patterns);
// Inequality of per-neuron activation frequency; 0 = uniform.
double gini(std::span<const double> values);

// One 0/1 row per pattern followed by a row of per-neuron frequencies.
void flocking_export(const std::vector<ActivationPattern>& patterns, const std::filesystem::path& path);

std::string format_number(double value);

}  // namespace tda::analysis
