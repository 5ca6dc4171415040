// tda: command-line front end for the sparse-FFN inference engine.
//
// Exit codes: 0 success, 2 usage error, 3 data/contract error,
// 4 numerical divergence.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tda/analysis.hpp"
#include "tda/bench.hpp"
#include "tda/emergence.hpp"
#include "tda/error.hpp"
#include "tda/model.hpp"
#include "tda/runtime.hpp"
#include "tda/simd.hpp"
#include "tda/sparsity.hpp"
#include "tda/strategies.hpp"
#include "tda/tokenizer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string output_dir;
  std::size_t threads = 1;
  bool verbose = false;
};

void log(const GlobalOptions& g, const std::string& line) {
  if (g.verbose) std::cerr << "[tda] " << line << '\n';
}

fs::path output_dir(const GlobalOptions& g, const std::string& local) {
  if (!local.empty()) return local;
  if (!g.output_dir.empty()) return g.output_dir;
  if (const char* env = std::getenv("TDA_OUTPUT_DIR")) return env;
  return ".";
}

struct ModelArgs {
  std::string model;
  std::string config;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model, "Weight file (flat tensor container)")->required();
    cmd->add_option("--config", config, "Model config JSON (default: <model>.config.json)");
  }

  void check() const {
    if (!fs::exists(model)) throw UsageError("model file '" + model + "' does not exist");
  }

  tda::ModelWeights load() const {
    const fs::path cfg = config.empty() ? tda::default_config_path(model) : fs::path(config);
    return tda::load_weights(model, tda::read_config(cfg));
  }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------- make-toy-model

struct MakeToyArgs {
  tda::ModelConfig config;
  std::string activation = "silu";
  std::string positional = "none";
  std::uint64_t seed = 0;
  std::string out;
};

void setup_make_toy(CLI::App& app, MakeToyArgs& a, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("make-toy-model", "Write a randomly initialized model and its config sidecar");
  cmd->add_option("--layers", a.config.n_layers, "Decoder blocks")->capture_default_str();
  cmd->add_option("--d-model", a.config.d_model, "Model width")->capture_default_str();
  cmd->add_option("--d-ff", a.config.d_ff, "FFN hidden width")->capture_default_str();
  cmd->add_option("--heads", a.config.n_heads, "Attention heads")->capture_default_str();
  cmd->add_option("--vocab", a.config.vocab_size, "Vocabulary size (>= 257)")->capture_default_str();
  cmd->add_option("--max-seq-len", a.config.max_seq_len, "Maximum sequence length")->capture_default_str();
  cmd->add_option("--activation", a.activation, "relu | silu | relu_squared")->capture_default_str();
  cmd->add_option("--positional", a.positional, "none | sinusoidal")->capture_default_str();
  cmd->add_option("--seed", a.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--out", a.out, "Output weight file")->required();
  cmd->callback([&] {
    run = [&] {
      try {
        a.config.activation = tda::parse_activation(a.activation);
        if (a.positional != "none" && a.positional != "sinusoidal") throw UsageError("--positional must be none or sinusoidal");
        a.config.positional = a.positional == "sinusoidal" ? tda::PositionalEncoding::sinusoidal : tda::PositionalEncoding::none;
        a.config.validate();
      } catch (const tda::ContractError& e) {
        throw UsageError(e.what());
      }
      const tda::ModelWeights w = tda::make_toy_model(a.config, a.seed);
      if (const fs::path parent = fs::path(a.out).parent_path(); !parent.empty()) fs::create_directories(parent);
      tda::save_weights(a.out, w);
      tda::write_config(tda::default_config_path(a.out), a.config);
      std::cout << "wrote " << a.out << " (" << a.config.n_layers << " layers, d_model " << a.config.d_model << ", d_ff "
                << a.config.d_ff << ")\n";
    };
  });
}

// ---------------------------------------------------------------- search-thresholds

struct SearchArgs {
  ModelArgs model;
  std::string calibration;
  double cett_target = 0.2;
  std::string out;
  std::string constraint = "mean";
  std::string magnitude = "output_norm";
  std::string aggregation = "flocking";
  std::string dataset_tag;
};

void setup_search(CLI::App& app, SearchArgs& a, const GlobalOptions& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("search-thresholds", "Calibrate per-layer thresholds at a CETT target");
  a.model.add(cmd);
  cmd->add_option("--calibration", a.calibration, "UTF-8 text file, one calibration text per line")->required();
  cmd->add_option("--cett-target", a.cett_target, "Target tail-truncation error")->capture_default_str();
  cmd->add_option("--out", a.out, "Profile JSON path (default: <output-dir>/profile.json)");
  cmd->add_option("--constraint", a.constraint, "mean | max over calibration tokens")->capture_default_str();
  cmd->add_option("--magnitude", a.magnitude, "output_norm | gated_only")->capture_default_str();
  cmd->add_option("--aggregation", a.aggregation, "Prompt aggregation stored in the profile: flocking | l2")
      ->capture_default_str();
  cmd->add_option("--dataset-tag", a.dataset_tag, "Free-form label stored in the profile");
  cmd->callback([&] {
    run = [&] {
      tda::ThresholdSearchOptions opts;
      tda::Aggregation aggregation;
      try {
        opts.cett_target = a.cett_target;
        opts.constraint = tda::parse_cett_constraint(a.constraint);
        opts.magnitude = tda::parse_magnitude_def(a.magnitude);
        aggregation = tda::parse_aggregation(a.aggregation);
      } catch (const tda::ContractError& e) {
        throw UsageError(e.what());
      }
      if (!(a.cett_target > 0.0 && a.cett_target < 1.0)) throw UsageError("--cett-target must lie in (0, 1)");
      a.model.check();
      std::ifstream in(a.calibration, std::ios::binary);
      if (!in) throw UsageError("cannot open calibration file '" + a.calibration + "'");
      std::vector<std::string> texts;
      for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) texts.push_back(line);
      }
      if (texts.empty()) throw tda::DataError("calibration file '" + a.calibration + "' is empty");

      const tda::ModelWeights w = a.model.load();
      std::vector<tda::PrefillTrace> traces;
      for (const auto& text : texts) {
        std::vector<tda::TokenId> ids = tda::tokenize(text);
        if (ids.size() > w.config.max_seq_len) ids.resize(w.config.max_seq_len);
        traces.push_back(tda::prefill(w, ids, true).trace);
      }
      log(g, "calibrating on " + std::to_string(texts.size()) + " texts");
      std::vector<tda::ThresholdSearchResult> details;
      const std::string tag = a.dataset_tag.empty() ? fs::path(a.calibration).filename().string() : a.dataset_tag;
      tda::ThresholdProfile profile = tda::calibrate_profile(w, traces, opts, tag, g.threads, &details);
      profile.aggregation = aggregation;

      const fs::path out = a.out.empty() ? output_dir(g, "") / "profile.json" : fs::path(a.out);
      if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
      tda::write_profile(out, profile);

      std::cout << "layer  epsilon       cett      iterations  monotone\n";
      for (std::size_t l = 0; l < details.size(); ++l) {
        std::printf("%5zu  %-12s  %-8s  %10d  %s\n", l, fmt(details[l].epsilon).c_str(),
                    fmt(details[l].cett_at_epsilon, 4).c_str(), details[l].iterations,
                    details[l].monotone_on_grid ? "yes" : "NO");
      }
      std::cout << "wrote " << out.string() << " (" << profile.n_tokens << " calibration tokens, target "
                << fmt(profile.cett_target) << ")\n";
    };
  });
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  ModelArgs model;
  std::string prompt;
  std::string strategy = "dense";
  std::string profile;
  std::optional<double> sparsity;
  std::size_t max_new_tokens = 32;
  std::optional<double> temperature;
  std::uint64_t seed = 0;
  std::size_t mask_refresh = 0;
  std::string dump_masks;
};

void setup_generate(CLI::App& app, GenerateArgs& a, const GlobalOptions& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("generate", "Generate a continuation with one FFN strategy");
  a.model.add(cmd);
  cmd->add_option("--prompt", a.prompt, "Prompt text")->required();
  cmd->add_option("--strategy", a.strategy, "dense | tt | griffin | tda")->capture_default_str();
  cmd->add_option("--profile", a.profile, "Threshold profile JSON (tt, tda)");
  cmd->add_option("--sparsity", a.sparsity, "Pruned fraction for griffin, in (0, 1)");
  cmd->add_option("--max-new-tokens", a.max_new_tokens, "Tokens to generate")->capture_default_str();
  cmd->add_option("--temperature", a.temperature, "Sample at this temperature instead of greedy decoding");
  cmd->add_option("--seed", a.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--mask-refresh", a.mask_refresh, "Rebuild masks every N steps (0 = never)")->capture_default_str();
  cmd->add_option("--dump-masks", a.dump_masks, "Write the sequence masks as hex bitmaps");
  cmd->callback([&] {
    run = [&] {
      tda::StrategySpec spec;
      try {
        spec.kind = tda::parse_strategy_kind(a.strategy);
      } catch (const tda::ContractError& e) {
        throw UsageError(e.what());
      }
      if ((spec.kind == tda::StrategyKind::tt || spec.kind == tda::StrategyKind::tda) && a.profile.empty()) {
        throw UsageError("--strategy " + a.strategy + " requires --profile");
      }
      if (spec.kind == tda::StrategyKind::griffin) {
        if (!a.sparsity) throw UsageError("--strategy griffin requires --sparsity");
        if (!(*a.sparsity > 0.0 && *a.sparsity < 1.0)) throw UsageError("--sparsity must lie in (0, 1)");
        spec.sparsity = a.sparsity;
      }
      if (a.temperature && !(*a.temperature > 0.0)) throw UsageError("--temperature must be positive");
      a.model.check();
      if (!a.profile.empty()) spec.profile = tda::read_profile(a.profile);

      const tda::ModelWeights w = a.model.load();
      if (spec.profile) spec.profile->validate(w.config.n_layers);
      auto strategy = tda::make_strategy(spec);

      tda::GenerationRequest req;
      req.prompt = tda::tokenize(a.prompt);
      req.max_new_tokens = a.max_new_tokens;
      req.mask_refresh_interval = a.mask_refresh;
      if (a.temperature) {
        req.sampling.mode = tda::SamplingConfig::Mode::temperature;
        req.sampling.temperature = *a.temperature;
      }
      req.sampling.seed = a.seed;
      log(g, "generating " + std::to_string(a.max_new_tokens) + " tokens with " + strategy->name());
      const tda::GenerationResult res = tda::generate(w, req, *strategy);

      std::cout << tda::detokenize(res.tokens) << '\n';
      std::cout << "---\n";
      std::cout << "strategy: " << strategy->name() << '\n';
      std::cout << "prompt_tokens: " << req.prompt.size() << '\n';
      std::cout << "new_tokens: " << res.tokens.size() << '\n';
      if (const auto* masked = dynamic_cast<const tda::MaskedFfn*>(strategy.get())) {
        const tda::SparsityReport rep = tda::sparsity_report(masked->masks());
        std::cout << "mean_active_fraction: " << fmt(rep.mean_active) << '\n';
        std::cout << "per_layer_active_fraction:";
        for (const double f : rep.per_layer_active) std::cout << ' ' << fmt(f);
        std::cout << '\n';
        if (!a.dump_masks.empty()) {
          std::ofstream dump(a.dump_masks, std::ios::binary | std::ios::trunc);
          if (!dump) throw tda::DataError("cannot write '" + a.dump_masks + "'");
          dump << tda::masks_to_hex(masked->masks());
        }
      } else {
        std::cout << "mean_active_fraction: " << fmt(res.generation_counters.active_fraction()) << '\n';
      }
      std::cout << "ffn_multiply_adds: " << res.generation_counters.ffn_macs << '\n';
      std::cout << "prefill_seconds: " << fmt(res.prefill_seconds) << '\n';
      std::cout << "generation_seconds: " << fmt(res.generation_seconds) << '\n';
    };
  });
}

// ---------------------------------------------------------------- analyze-inertia

struct InertiaArgs {
  ModelArgs model;
  std::string samples;
  std::string out_dir;
  std::string metric = "jaccard";
  std::optional<std::size_t> layer;
  std::string profile;
  bool pretrained = false;
};

void setup_inertia(CLI::App& app, InertiaArgs& a, const GlobalOptions& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("analyze-inertia", "Similarity battery and flocking heatmaps");
  a.model.add(cmd);
  cmd->add_option("--samples", a.samples, "JSON list of {index, text, treatment} (default: built-in 13 samples)");
  cmd->add_option("--out-dir", a.out_dir, "Output directory (created if missing)");
  cmd->add_option("--metric", a.metric, "jaccard | cosine")->capture_default_str();
  cmd->add_option("--layer", a.layer, "Use a single layer instead of averaging over layers");
  cmd->add_option("--profile", a.profile, "Binarize at the profile's per-layer epsilon");
  cmd->add_flag("--pretrained", a.pretrained, "Weights are trained: evaluate the ordinal claims as pass/fail");
  cmd->callback([&] {
    run = [&] {
      tda::analysis::BatteryOptions opts;
      try {
        opts.metric = tda::analysis::parse_metric(a.metric);
      } catch (const tda::ContractError& e) {
        throw UsageError(e.what());
      }
      opts.layer = a.layer;
      opts.pretrained = a.pretrained;
      a.model.check();
      if (!a.profile.empty()) opts.profile = tda::read_profile(a.profile);
      const std::vector<tda::analysis::BatterySample> samples =
          a.samples.empty() ? tda::analysis::builtin_battery() : tda::analysis::read_battery(a.samples);
      if (samples.size() < 2) throw UsageError("the sample battery needs at least two samples");

      const tda::ModelWeights w = a.model.load();
      const fs::path dir = output_dir(g, a.out_dir);
      fs::create_directories(dir);
      log(g, "running " + std::to_string(samples.size()) + "-sample battery");
      const tda::analysis::InertiaReport report = tda::analysis::inertia_battery(w, samples, opts);
      tda::analysis::write_similarity_csv(dir / "similarity.csv", report.matrix);
      {
        std::ofstream out(dir / "ordinal.json", std::ios::binary | std::ios::trunc);
        out << tda::analysis::ordinal_report_json(report).dump(2) << '\n';
      }

      const std::size_t layer = a.layer.value_or(0);
      const std::vector<tda::TokenId> tokens = tda::tokenize(samples.front().text);
      std::optional<double> cut;
      if (opts.profile) cut = opts.profile->per_layer_epsilon.at(layer);
      const auto token_patterns = tda::analysis::extract_pattern(w, tokens, tda::analysis::PatternMode::per_token, layer, cut);
      const auto seq_patterns = tda::analysis::extract_pattern(w, tokens, tda::analysis::PatternMode::as_sequence, layer, cut);
      tda::analysis::flocking_export(token_patterns, dir / "heatmap_token.csv");
      tda::analysis::flocking_export(seq_patterns, dir / "heatmap_sequence.csv");

      std::cout << "similarity matrix: " << report.matrix.size() << "x" << report.matrix.size() << " -> "
                << (dir / "similarity.csv").string() << '\n';
      for (const auto& c : report.checks) {
        std::cout << "claim " << c.check_id << ": " << c.lhs << "=" << fmt(c.lhs_value, 4) << " > " << c.rhs << "="
                  << fmt(c.rhs_value, 4) << " -> "
                  << (report.ordinal_applicable ? (c.observed ? "pass" : "fail")
                                                : std::string("n/a (observed ") + (c.observed ? "true" : "false") + ")")
                  << '\n';
      }
      std::cout << "flocking gini (layer " << layer << "): token="
                << fmt(tda::analysis::gini(tda::analysis::activation_frequency(token_patterns)), 4)
                << " sequence=" << fmt(tda::analysis::gini(tda::analysis::activation_frequency(seq_patterns)), 4) << '\n';
    };
  });
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  ModelArgs model;
  std::string spec_file;
  std::size_t prompt_length = 128;
  std::size_t new_tokens = 128;
  std::vector<std::string> strategies{"dense", "tt", "griffin", "tda"};
  std::size_t repetitions = 5;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;
  double sparsity = 0.5;
  double cett_target = 0.2;
  std::string profile;
  std::vector<std::string> formats{"markdown"};
  std::string out_dir;
};

void setup_bench(CLI::App& app, BenchArgs& a, const GlobalOptions& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("bench", "Generation-phase latency and fidelity across strategies");
  a.model.add(cmd);
  cmd->add_option("--spec", a.spec_file, "BenchSpec JSON; explicit flags override its fields");
  cmd->add_option("--prompt-length", a.prompt_length, "Prompt tokens including BOS")->capture_default_str();
  cmd->add_option("--new-tokens", a.new_tokens, "Generated tokens")->capture_default_str();
  cmd->add_option("--strategies", a.strategies, "Comma-separated subset of dense,tt,griffin,tda")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--repetitions", a.repetitions, "Timed runs per strategy (>= 3)")->capture_default_str();
  cmd->add_option("--warmup", a.warmup, "Discarded runs per strategy")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Prompt seed")->capture_default_str();
  cmd->add_option("--sparsity", a.sparsity, "Griffin/TDA sparsity")->capture_default_str();
  cmd->add_option("--cett-target", a.cett_target, "CETT target for the prompt-calibrated profile")->capture_default_str();
  cmd->add_option("--profile", a.profile, "Use this profile instead of calibrating on the prompt");
  cmd->add_option("--format", a.formats, "json,csv,markdown (markdown is also printed)")->delimiter(',')->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Directory for bench.<ext> report files");
  cmd->callback([&, cmd] {
    run = [&, cmd] {
      tda::bench::BenchSpec spec;
      if (!a.spec_file.empty()) {
        std::ifstream in(a.spec_file);
        if (!in) throw UsageError("cannot open --spec '" + a.spec_file + "'");
        nlohmann::json j;
        try {
          in >> j;
        } catch (const nlohmann::json::exception& e) {
          throw UsageError(std::string("--spec: ") + e.what());
        }
        auto take = [&](const char* key, auto& field) {
          if (j.contains(key) && cmd->count(std::string("--") + key) == 0) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        take("prompt-length", a.prompt_length);
        take("new-tokens", a.new_tokens);
        take("strategies", a.strategies);
        take("repetitions", a.repetitions);
        take("warmup", a.warmup);
        take("seed", a.seed);
        take("sparsity", a.sparsity);
        take("cett-target", a.cett_target);
      }
      std::vector<tda::bench::ReportFormat> formats;
      try {
        spec.strategies.clear();
        for (const auto& s : a.strategies) spec.strategies.push_back(tda::parse_strategy_kind(s));
        for (const auto& f : a.formats) formats.push_back(tda::bench::parse_report_format(f));
      } catch (const tda::ContractError& e) {
        throw UsageError(e.what());
      }
      spec.model_path = a.model.model;
      spec.prompt_length = a.prompt_length;
      spec.new_tokens = a.new_tokens;
      spec.repetitions = a.repetitions;
      spec.warmup = a.warmup;
      spec.seed = a.seed;
      spec.sparsity = a.sparsity;
      spec.cett_target = a.cett_target;
      if (spec.repetitions < 3) throw UsageError("--repetitions must be >= 3");
      if (!(spec.sparsity > 0.0 && spec.sparsity < 1.0)) throw UsageError("--sparsity must lie in (0, 1)");
      a.model.check();
      if (!a.profile.empty()) spec.profile = tda::read_profile(a.profile);

      const tda::ModelWeights w = a.model.load();
      log(g, "benchmarking with " + std::string(tda::simd::kernels().name) + " kernels");
      const tda::bench::BenchReport report = tda::bench::run_bench(w, spec);

      std::cout << tda::bench::render_report(report, tda::bench::ReportFormat::markdown);
      const bool write_files = !a.out_dir.empty() || !g.output_dir.empty() || std::getenv("TDA_OUTPUT_DIR") != nullptr ||
                               cmd->count("--format") > 0;
      if (write_files) {
        const fs::path dir = output_dir(g, a.out_dir);
        fs::create_directories(dir);
        for (const auto f : formats) {
          const char* ext = f == tda::bench::ReportFormat::json ? "json" : f == tda::bench::ReportFormat::csv ? "csv" : "md";
          tda::bench::emit_report(report, f, dir / (std::string("bench.") + ext));
          std::cout << "wrote " << (dir / (std::string("bench.") + ext)).string() << '\n';
        }
      }
      for (const auto& row : report.rows) {
        if (row.noisy) std::cout << "note: " << row.strategy << " timings are noisy (stddev/median > 0.25)\n";
      }
    };
  });
}

// ---------------------------------------------------------------- emergence

struct EmergenceArgs {
  std::string variant = "both";
  tda::emergence::EmergenceConfig config;
  std::string out_dir;
};

void setup_emergence(CLI::App& app, EmergenceArgs& a, const GlobalOptions& g, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("emergence", "Train the toy network and record activation sparsity");
  cmd->add_option("--variant", a.variant, "relu | swiglu | both")->capture_default_str();
  cmd->add_option("--steps", a.config.steps, "SGD steps")->capture_default_str();
  cmd->add_option("--seed", a.config.seed, "Data and init seed")->capture_default_str();
  cmd->add_option("--lr", a.config.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--d-in", a.config.d_in, "Input width")->capture_default_str();
  cmd->add_option("--d-hidden", a.config.d_hidden, "Hidden width")->capture_default_str();
  cmd->add_option("--classes", a.config.classes, "Classes")->capture_default_str();
  cmd->add_option("--record-every", a.config.record_every, "Measurement interval in steps")->capture_default_str();
  cmd->add_option("--out", a.out_dir, "Output directory for trajectory_<variant>.csv");
  cmd->callback([&] {
    run = [&] {
      std::vector<tda::emergence::ToyVariant> variants;
      if (a.variant == "both") {
        variants = {tda::emergence::ToyVariant::relu, tda::emergence::ToyVariant::swiglu};
      } else {
        try {
          variants = {tda::emergence::parse_variant(a.variant)};
        } catch (const tda::ContractError& e) {
          throw UsageError(e.what());
        }
      }
      if (a.config.classes < 2 || a.config.d_in == 0 || a.config.d_hidden == 0 || a.config.record_every == 0) {
        throw UsageError("--classes must be >= 2 and sizes positive");
      }
      const fs::path dir = output_dir(g, a.out_dir);
      fs::create_directories(dir);
      std::vector<double> finals;
      for (const auto v : variants) {
        const auto traj = tda::emergence::emergence_experiment(a.config, v);
        const fs::path path = dir / ("trajectory_" + tda::emergence::to_string(v) + ".csv");
        tda::emergence::write_trajectory_csv(path, traj);
        if (traj.diverged_at) {
          throw DivergenceError(tda::emergence::to_string(v) + " diverged (loss NaN) at step " +
                                std::to_string(*traj.diverged_at));
        }
        const auto& first = traj.points.front();
        const auto& last = traj.points.back();
        std::cout << tda::emergence::to_string(v) << ": near_zero_fraction " << fmt(first.near_zero_fraction, 4) << " -> "
                  << fmt(last.near_zero_fraction, 4) << ", mean_pos_magnitude " << fmt(first.mean_pos_magnitude, 4)
                  << " -> " << fmt(last.mean_pos_magnitude, 4) << " (" << path.string() << ")\n";
        finals.push_back(last.near_zero_fraction);
      }
      if (finals.size() == 2) {
        std::cout << "final near-zero fraction: relu " << fmt(finals[0], 4) << (finals[0] > finals[1] ? " > " : " <= ")
                  << "swiglu " << fmt(finals[1], 4) << '\n';
      }
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-FFN transformer inference: dense, TT, Griffin-style top-k and TDA strategies"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--output-dir", g.output_dir, "Default output directory (env TDA_OUTPUT_DIR)");
  app.add_option("--threads", g.threads, "Worker cap for parallel stages")->capture_default_str();
  app.add_flag("-v,--verbose", g.verbose, "Log progress to stderr");

  std::function<void()> run;
  MakeToyArgs make_toy;
  SearchArgs search;
  GenerateArgs gen;
  InertiaArgs inertia;
  BenchArgs bench;
  EmergenceArgs emergence;
  setup_make_toy(app, make_toy, run);
  setup_search(app, search, g, run);
  setup_generate(app, gen, g, run);
  setup_inertia(app, inertia, g, run);
  setup_bench(app, bench, g, run);
  setup_emergence(app, emergence, g, run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g.threads == 0) throw UsageError("--threads must be >= 1");
    run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const tda::ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const tda::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
