#include <gtest/gtest.h>

#include "tda/bench.hpp"
#include "tda/error.hpp"
#include "test_util.hpp"

using namespace tda;
using namespace tda::bench;

namespace {

BenchSpec small_spec() {
  BenchSpec s;
  s.prompt_length = 24;
  s.new_tokens = 12;
  s.repetitions = 3;
  s.warmup = 0;
  return s;
}

}  // namespace

TEST(Bench, PromptIsSeededAndStartsWithBos) {
  const auto a = bench_prompt(64, 3);
  EXPECT_EQ(a, bench_prompt(64, 3));
  EXPECT_NE(a, bench_prompt(64, 4));
  ASSERT_EQ(a.size(), 64u);
  EXPECT_EQ(a[0], kBosToken);
  for (std::size_t i = 1; i < a.size(); ++i) {
    EXPECT_GE(a[i], 32);
    EXPECT_LE(a[i], 126);
  }
}

TEST(Bench, SpecValidation) {
  BenchSpec s = small_spec();
  const ModelConfig c = test::small_config();
  EXPECT_NO_THROW(s.validate(c));
  s.repetitions = 2;
  EXPECT_THROW(s.validate(c), ContractError);
  s = small_spec();
  s.prompt_length = 500;
  s.new_tokens = 100;
  EXPECT_THROW(s.validate(c), ContractError);
}

TEST(Bench, SmallRunIsConsistent) {
  const ModelWeights w = test::small_model(5, 2, 32, 128);
  const BenchReport r = run_bench(w, small_spec());
  ASSERT_EQ(r.rows.size(), 4u);
  const StrategyReport* dense = r.find("dense");
  ASSERT_NE(dense, nullptr);
  EXPECT_EQ(dense->token_agreement, 1.0);
  EXPECT_EQ(dense->mean_ffn_relative_error, 0.0);
  EXPECT_EQ(dense->reduction_vs_dense, 0.0);
  EXPECT_EQ(dense->ffn_macs, 11u * 2 * 3 * 32 * 128);
  const StrategyReport* griffin = r.find("griffin");
  EXPECT_EQ(griffin->mean_active_fraction, 0.5);
  EXPECT_EQ(griffin->ffn_macs, 11u * 2 * 3 * 32 * 64);
  // TDA thresholds are rescaled toward Griffin's sparsity.
  EXPECT_NEAR(r.find("tda")->mean_active_fraction, 0.5, 0.05);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.run_seconds.size(), 3u);
    EXPECT_GT(row.median_seconds, 0.0);
  }
}

TEST(Bench, FidelityProbeOfDenseAgainstItselfIsExact) {
  const ModelWeights w = test::small_model(5);
  DenseFfn a, b;
  const auto f = fidelity_probe(w, tokenize("probe"), a, b, 8, true);
  EXPECT_EQ(f.token_agreement, 1.0);
  for (double g : f.max_abs_logit_gap) EXPECT_EQ(g, 0.0);
  for (double e : f.ffn_relative_error) EXPECT_EQ(e, 0.0);
  EXPECT_EQ(f.calls.size(), 7u * 2);
  EXPECT_EQ(f.calls[0].input.size(), 32u);
}

TEST(Bench, ReportRoundTripAndRendering) {
  const ModelWeights w = test::small_model(6);
  BenchSpec s = small_spec();
  s.strategies = {StrategyKind::dense, StrategyKind::griffin};
  const BenchReport r = run_bench(w, s);
  const BenchReport back = report_from_json(to_json(r));
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());

  const std::string md = render_report(r, ReportFormat::markdown);
  EXPECT_NE(md.find("| Dense | Griffin |"), std::string::npos) << md;
  EXPECT_NE(md.find("%"), std::string::npos);
  const std::string csv = render_report(r, ReportFormat::csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::markdown);
  EXPECT_THROW(parse_report_format("xml"), ContractError);
}
