#include <algorithm>
#include <fstream>
#include <set>

#include "tda/analysis.hpp"
#include "tda/error.hpp"
#include "tda/runtime.hpp"

namespace tda::analysis {

const std::vector<BatterySample>& builtin_battery() {
  static const std::vector<BatterySample> samples = {
      {1, "### Article: Almost one million people visited the city", "Baseline"},
      {2, "Article: Almost one million people visited the city", "Remove beginning token"},
      {3, "Almost one million people visited the city", "Remove beginning tokens"},
      {4, "### Article: Nearly one million people visited the city", "Modify the word at the beginning of the sequence."},
      {5, "Nearly one million people visited the city", "Remove beginning tokens"},
      {6, "### Article: Less than one million people visited the city", "Change to antonym"},
      {7, "Less than one million people visited the city", "Remove beginning tokens"},
      {8, "### Article: Almost one million people visited the city", "Similarity threshold"},
      {9, "### Article: Almost one million people visited the restaurant", "Change to synonyms"},
      {10, "Almost one million people visited the restaurant", "Modify the word at the end of the sequence"},
      {11, "Almost one million people visited the planet", "Modify the word at the end of the sequence"},
      {12, "Almost one million tourists visited the restaurant", "Modify the words at the middle and end"},
      {13, "Almost one million aliens visited the planet", "Dissimilarity threshold"},
  };
  return samples;
}

std::vector<BatterySample> read_battery(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open sample file '" + path.string() + "'");
  std::vector<BatterySample> samples;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto& item : j) {
      samples.push_back({item.at("index").get<int>(), item.at("text").get<std::string>(),
                         item.value("treatment", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("sample file '" + path.string() + "': " + e.what());
  }
  return samples;
}

InertiaReport inertia_battery(const ModelWeights& weights, const std::vector<BatterySample>& samples,
                              const BatteryOptions& options) {
  if (samples.size() < 2) throw ContractError("inertia_battery: need at least two samples");
  const std::size_t n_layers = weights.config.n_layers;
  if (options.layer && *options.layer >= n_layers) throw ContractError("inertia_battery: layer out of range");
  if (options.profile) options.profile->validate(n_layers);

  std::vector<std::size_t> layers;
  if (options.layer) {
    layers.push_back(*options.layer);
  } else {
    for (std::size_t l = 0; l < n_layers; ++l) layers.push_back(l);
  }

  // patterns[sample][k] for layer layers[k], taken at the final position.
  std::vector<std::vector<std::vector<bool>>> patterns(samples.size());
  Vector mags(weights.config.d_ff);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const std::vector<TokenId> tokens = tokenize(samples[s].text);
    const PrefillResult run = prefill(weights, tokens);
    const std::size_t last = tokens.size() - 1;
    for (const std::size_t l : layers) {
      magnitudes_from_hidden(weights.layers[l], run.trace.hidden(l, last), MagnitudeDef::output_norm, mags);
      double cut = 1e-3 * *std::max_element(mags.begin(), mags.end());
      if (options.profile) cut = options.profile->per_layer_epsilon[l];
      std::vector<bool> active(mags.size());
      for (std::size_t i = 0; i < mags.size(); ++i) active[i] = mags[i] > cut;
      patterns[s].push_back(std::move(active));
    }
  }

  InertiaReport report;
  const std::size_t n = samples.size();
  report.matrix.values.assign(n, std::vector<double>(n, 1.0));
  for (const auto& s : samples) report.matrix.labels.push_back("S" + std::to_string(s.index));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < layers.size(); ++k) total += pattern_similarity(patterns[i][k], patterns[j][k], options.metric);
      const double sim = total / static_cast<double>(layers.size());
      report.matrix.values[i][j] = sim;
      report.matrix.values[j][i] = sim;
    }
  }

  bool canonical = n == 13;
  for (std::size_t i = 0; canonical && i < n; ++i) canonical = samples[i].index == static_cast<int>(i + 1);
  if (canonical) report.checks = evaluate_ordinal_claims(report.matrix);
  report.ordinal_applicable = canonical && options.pretrained;
  return report;
}

std::vector<OrdinalCheck> evaluate_ordinal_claims(const SimilarityMatrix& m) {
  if (m.size() != 13) throw ContractError("ordinal claims need the 13-sample matrix");
  auto sim = [&m](int a, int b) { return m(static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)); };
  auto name = [](int a, int b) { return "sim(" + std::to_string(a) + "," + std::to_string(b) + ")"; };
  std::vector<OrdinalCheck> checks;
  auto add = [&checks](std::string id, std::string lhs, double lv, std::string rhs, double rv) {
    checks.push_back({std::move(id), std::move(lhs), std::move(rhs), lv, rv, lv > rv});
  };
  // Mean over sim(s, j) for j outside `exclude`.
  auto mean_outside = [&](int s, const std::set<int>& exclude) {
    double total = 0.0;
    int count = 0;
    for (int j = 1; j <= 13; ++j) {
      if (j == s || exclude.contains(j)) continue;
      total += sim(s, j);
      ++count;
    }
    return total / count;
  };

  // (a) Samples 4, 6, 9 sit closer to 1 than to 2 and 3.
  for (const int s : {4, 6, 9}) {
    add("a." + std::to_string(s), name(s, 1), sim(s, 1), "max(" + name(s, 2) + "," + name(s, 3) + ")",
        std::max(sim(s, 2), sim(s, 3)));
  }
  // (b) Samples 1, 6, 8, 9 sit closer to 4 than to 5.
  for (const int s : {1, 6, 8, 9}) add("b." + std::to_string(s), name(s, 4), sim(s, 4), name(s, 5), sim(s, 5));
  // (c) Sample 9 sits closer to {4, 6, 8} than to the remaining samples.
  add("c", "mean(sim(9,{4,6,8}))", (sim(9, 4) + sim(9, 6) + sim(9, 8)) / 3.0, "mean(sim(9,others))",
      mean_outside(9, {4, 6, 8}));
  // (d) Samples 11 and 12 sit closer to {9, 10} than to the remaining samples.
  for (const int s : {11, 12}) {
    add("d." + std::to_string(s), "mean(sim(" + std::to_string(s) + ",{9,10}))", (sim(s, 9) + sim(s, 10)) / 2.0,
        "mean(sim(" + std::to_string(s) + ",others))", mean_outside(s, {9, 10, 11, 12}));
  }
  // (e) Samples 10, 11, 12 sit closer to 13 than to any other sample.
  for (const int s : {10, 11, 12}) {
    double best = 0.0;
    for (int j = 1; j <= 13; ++j) {
      if (j != s && j != 13) best = std::max(best, sim(s, j));
    }
    add("e." + std::to_string(s), name(s, 13), sim(s, 13), "max(sim(" + std::to_string(s) + ",others))", best);
  }
  return checks;
}

void write_similarity_csv(const std::filesystem::path& path, const SimilarityMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "sample";
  for (const auto& l : matrix.labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out << matrix.labels.at(i);
    for (const double v : matrix.values[i]) out << ',' << format_number(v);
    out << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

nlohmann::ordered_json ordinal_report_json(const InertiaReport& report) {
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json j;
    j["check_id"] = c.check_id;
    j["lhs"] = c.lhs;
    j["rhs"] = c.rhs;
    j["lhs_value"] = c.lhs_value;
    j["rhs_value"] = c.rhs_value;
    j["observed"] = c.observed;
    // Untrained weights carry no semantics: the claim is not applicable.
    j["pass"] = report.ordinal_applicable ? nlohmann::ordered_json(c.observed) : nlohmann::ordered_json(nullptr);
    checks.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["applicable"] = report.ordinal_applicable;
  out["checks"] = std::move(checks);
  return out;
}

}  // namespace tda::analysis
