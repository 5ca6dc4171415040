#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tda/analysis.hpp"
#include "tda/error.hpp"
#include "test_util.hpp"

using namespace tda;
using namespace tda::analysis;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST(Similarity, Axioms) {
  const std::vector<bool> a{true, true, false, false}, b{true, false, true, false}, e(4, false);
  for (auto metric : {SimilarityMetric::jaccard, SimilarityMetric::cosine}) {
    EXPECT_EQ(pattern_similarity(a, a, metric), 1.0);
    EXPECT_EQ(pattern_similarity(e, e, metric), 1.0);
    EXPECT_EQ(pattern_similarity(a, e, metric), 0.0);
    EXPECT_EQ(pattern_similarity(a, b, metric), pattern_similarity(b, a, metric));
  }
  EXPECT_NEAR(pattern_similarity(a, b, SimilarityMetric::jaccard), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(pattern_similarity(a, b, SimilarityMetric::cosine), 0.5, 1e-15);
  EXPECT_THROW(parse_metric("hamming"), ContractError);
}

TEST(Patterns, ModesProduceOnePatternPerToken) {
  const ModelWeights w = test::small_model(1);
  const auto tokens = tokenize("patterns");
  const auto per_token = extract_pattern(w, tokens, PatternMode::per_token, 1);
  const auto seq = extract_pattern(w, tokens, PatternMode::as_sequence, 1);
  ASSERT_EQ(per_token.size(), tokens.size());
  ASSERT_EQ(seq.size(), tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    EXPECT_EQ(per_token[t].token, tokens[t]);
    EXPECT_EQ(seq[t].position, t);
    EXPECT_EQ(seq[t].layer, 1u);
    EXPECT_EQ(seq[t].active.size(), 96u);
  }
  // The first sequence position sees only itself.
  EXPECT_EQ(seq[0].active, per_token[0].active);
}

TEST(Patterns, ExplicitThresholdBinarizes) {
  const ModelWeights w = test::small_model(1);
  const auto tokens = tokenize("x");
  const auto none = extract_pattern(w, tokens, PatternMode::as_sequence, 0, 1e9);
  EXPECT_EQ(std::count(none[0].active.begin(), none[0].active.end(), true), 0);
  const auto all = extract_pattern(w, tokens, PatternMode::as_sequence, 0, -1.0);
  EXPECT_EQ(std::count(all[0].active.begin(), all[0].active.end(), true), 96);
}

TEST(Flocking, CsvLayout) {
  ActivationPattern a, b;
  a.active = {true, false, true};
  b.active = {true, true, false};
  const auto path = std::filesystem::temp_directory_path() / "tda_flocking.csv";
  flocking_export({a, b}, path);
  EXPECT_EQ(read_lines(path), (std::vector<std::string>{"1,0,1", "1,1,0", "1,0.5,0.5"}));
}

TEST(Flocking, Gini) {
  EXPECT_EQ(gini(std::vector<double>{1, 1, 1, 1}), 0.0);
  EXPECT_NEAR(gini(std::vector<double>{0, 0, 0, 1}), 0.75, 1e-12);
  EXPECT_EQ(gini(std::vector<double>{0, 0}), 0.0);
}

TEST(Battery, BuiltinSetHasThirteenSamples) {
  const auto& b = builtin_battery();
  ASSERT_EQ(b.size(), 13u);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b[i].index, static_cast<int>(i + 1));
    EXPECT_FALSE(b[i].text.empty());
  }
}

TEST(Battery, MatrixIsSymmetricWithUnitDiagonal) {
  const ModelWeights w = test::small_model(2);
  for (auto metric : {SimilarityMetric::jaccard, SimilarityMetric::cosine}) {
    BatteryOptions opts;
    opts.metric = metric;
    const InertiaReport r = inertia_battery(w, builtin_battery(), opts);
    ASSERT_EQ(r.matrix.size(), 13u);
    for (std::size_t i = 0; i < 13; ++i) {
      EXPECT_EQ(r.matrix(i, i), 1.0);
      for (std::size_t j = 0; j < 13; ++j) {
        EXPECT_EQ(r.matrix(i, j), r.matrix(j, i));
        EXPECT_GE(r.matrix(i, j), 0.0);
        EXPECT_LE(r.matrix(i, j), 1.0);
      }
    }
    EXPECT_FALSE(r.ordinal_applicable);
    EXPECT_EQ(r.checks.size(), 13u);
  }
}

TEST(Battery, OrdinalReportMarksNotApplicable) {
  const ModelWeights w = test::small_model(2);
  const InertiaReport r = inertia_battery(w, builtin_battery());
  const auto j = ordinal_report_json(r);
  EXPECT_FALSE(j["applicable"].get<bool>());
  for (const auto& c : j["checks"]) EXPECT_TRUE(c["pass"].is_null());

  BatteryOptions opts;
  opts.pretrained = true;
  const auto jp = ordinal_report_json(inertia_battery(w, builtin_battery(), opts));
  EXPECT_TRUE(jp["applicable"].get<bool>());
  for (const auto& c : jp["checks"]) EXPECT_TRUE(c["pass"].is_boolean());
}

TEST(Battery, OrdinalClaimsOnConstructedMatrix) {
  // Similarity falls with index distance, so every "nearer sample" claim about
  // samples 1..3 versus 4 holds for 4 and fails where the claim points away.
  SimilarityMatrix m;
  m.values.assign(13, std::vector<double>(13, 0.0));
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 13; ++j) m.values[i][j] = 1.0 / (1.0 + std::abs(double(i) - double(j)));
  const auto checks = evaluate_ordinal_claims(m);
  ASSERT_EQ(checks.size(), 13u);
  EXPECT_EQ(checks[0].check_id, "a.4");
  EXPECT_FALSE(checks[0].observed);  // sim(4,1) < sim(4,3)
  for (const auto& c : checks) EXPECT_EQ(c.observed, c.lhs_value > c.rhs_value);
}

TEST(Battery, SmallBatteryFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "tda_battery.json";
  std::ofstream(path) << R"([{"index":1,"text":"a b c","treatment":"x"},{"index":2,"text":"d e f","treatment":"y"}])";
  const auto samples = read_battery(path);
  ASSERT_EQ(samples.size(), 2u);
  const InertiaReport r = inertia_battery(test::small_model(3), samples);
  EXPECT_EQ(r.matrix.size(), 2u);
  EXPECT_TRUE(r.checks.empty());
}

TEST(Battery, SimilarityCsvHeader) {
  const InertiaReport r = inertia_battery(test::small_model(3), builtin_battery());
  const auto path = std::filesystem::temp_directory_path() / "tda_sim.csv";
  write_similarity_csv(path, r.matrix);
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 14u);
  EXPECT_EQ(lines[0].rfind("sample,S1,S2,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("S1,1,", 0), 0u);
}
