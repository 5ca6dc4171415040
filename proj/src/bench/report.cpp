#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tda/analysis.hpp"
#include "tda/bench.hpp"
#include "tda/error.hpp"

namespace tda::bench {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// "(12.34%↓)" for a reduction, "(3.21%↑)" for a slowdown.
std::string reduction_note(double reduction) {
  const double pct = 100.0 * reduction;
  return "(" + fixed(std::fabs(pct), 2) + "%" + (pct >= 0.0 ? "↓" : "↑") + ")";
}

std::string title_case(const std::string& s) {
  if (s == "tt") return "TT";
  if (s == "tda") return "TDA";
  if (s.empty()) return s;
  std::string t = s;
  t[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
  return t;
}

std::string render_markdown(const BenchReport& r) {
  std::ostringstream out;
  const std::string model = r.model + " (L" + std::to_string(r.n_layers) + ", d_model " + std::to_string(r.d_model) +
                            ", d_ff " + std::to_string(r.d_ff) + ")";
  out << "Generation phase latency (s), median of " << r.repetitions << " runs; prompt " << r.prompt_length
      << ", new tokens " << r.new_tokens << ", sparsity " << analysis::format_number(r.sparsity) << ", kernels "
      << r.kernels << ".\n\n";
  out << "| Model |";
  for (const auto& row : r.rows) out << ' ' << title_case(row.strategy) << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < r.rows.size(); ++i) out << "---|";
  out << "\n| " << model << " |";
  for (const auto& row : r.rows) {
    out << ' ' << fixed(row.median_seconds, 4);
    if (row.strategy != "dense" && r.find("dense") != nullptr) out << reduction_note(row.reduction_vs_dense);
    if (row.noisy) out << " (noisy)";
    out << " |";
  }
  out << "\n\n| Strategy | Mean (s) | Stddev (s) | FFN multiply-adds | Active fraction | Token agreement | FFN rel. error |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& row : r.rows) {
    out << "| " << title_case(row.strategy) << " | " << fixed(row.mean_seconds, 4) << " | " << fixed(row.stddev_seconds, 4)
        << " | " << row.ffn_macs << " | " << fixed(row.mean_active_fraction, 4) << " | "
        << fixed(row.token_agreement, 4) << " | " << fixed(row.mean_ffn_relative_error, 4) << " |\n";
  }
  return out.str();
}

std::string render_csv(const BenchReport& r) {
  std::ostringstream out;
  out << "strategy,median_s,mean_s,stddev_s,noisy,ffn_macs,ffn_calls,mean_active_fraction,token_agreement,"
         "mean_ffn_relative_error,reduction_vs_dense\n";
  for (const auto& row : r.rows) {
    out << row.strategy << ',' << analysis::format_number(row.median_seconds) << ','
        << analysis::format_number(row.mean_seconds) << ',' << analysis::format_number(row.stddev_seconds) << ','
        << (row.noisy ? 1 : 0) << ',' << row.ffn_macs << ',' << row.ffn_calls << ','
        << analysis::format_number(row.mean_active_fraction) << ',' << analysis::format_number(row.token_agreement)
        << ',' << analysis::format_number(row.mean_ffn_relative_error) << ','
        << analysis::format_number(row.reduction_vs_dense) << '\n';
  }
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw ContractError("unknown report format '" + std::string(name) + "'");
}

nlohmann::ordered_json to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["n_layers"] = r.n_layers;
  j["d_model"] = r.d_model;
  j["d_ff"] = r.d_ff;
  j["prompt_length"] = r.prompt_length;
  j["new_tokens"] = r.new_tokens;
  j["repetitions"] = r.repetitions;
  j["warmup"] = r.warmup;
  j["seed"] = r.seed;
  j["sparsity"] = r.sparsity;
  j["kernels"] = r.kernels;
  j["tda_epsilon"] = r.tda_epsilon;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["strategy"] = row.strategy;
    o["run_seconds"] = row.run_seconds;
    o["median_seconds"] = row.median_seconds;
    o["mean_seconds"] = row.mean_seconds;
    o["stddev_seconds"] = row.stddev_seconds;
    o["noisy"] = row.noisy;
    o["ffn_macs"] = row.ffn_macs;
    o["ffn_calls"] = row.ffn_calls;
    o["mean_active_fraction"] = row.mean_active_fraction;
    o["token_agreement"] = row.token_agreement;
    o["mean_ffn_relative_error"] = row.mean_ffn_relative_error;
    o["reduction_vs_dense"] = row.reduction_vs_dense;
    rows.push_back(std::move(o));
  }
  j["strategies"] = std::move(rows);
  return j;
}

BenchReport report_from_json(const nlohmann::json& j) {
  BenchReport r;
  try {
    r.model = j.at("model").get<std::string>();
    r.n_layers = j.at("n_layers").get<std::size_t>();
    r.d_model = j.at("d_model").get<std::size_t>();
    r.d_ff = j.at("d_ff").get<std::size_t>();
    r.prompt_length = j.at("prompt_length").get<std::size_t>();
    r.new_tokens = j.at("new_tokens").get<std::size_t>();
    r.repetitions = j.at("repetitions").get<std::size_t>();
    r.warmup = j.at("warmup").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sparsity = j.at("sparsity").get<double>();
    r.kernels = j.at("kernels").get<std::string>();
    r.tda_epsilon = j.at("tda_epsilon").get<std::vector<double>>();
    for (const auto& o : j.at("strategies")) {
      StrategyReport row;
      row.strategy = o.at("strategy").get<std::string>();
      row.run_seconds = o.at("run_seconds").get<std::vector<double>>();
      row.median_seconds = o.at("median_seconds").get<double>();
      row.mean_seconds = o.at("mean_seconds").get<double>();
      row.stddev_seconds = o.at("stddev_seconds").get<double>();
      row.noisy = o.at("noisy").get<bool>();
      row.ffn_macs = o.at("ffn_macs").get<std::uint64_t>();
      row.ffn_calls = o.at("ffn_calls").get<std::uint64_t>();
      row.mean_active_fraction = o.at("mean_active_fraction").get<double>();
      row.token_agreement = o.at("token_agreement").get<double>();
      row.mean_ffn_relative_error = o.at("mean_ffn_relative_error").get<double>();
      row.reduction_vs_dense = o.at("reduction_vs_dense").get<double>();
      r.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bench report: ") + e.what());
  }
  return r;
}

std::string render_report(const BenchReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::json: return to_json(report).dump(2) + "\n";
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::markdown: return render_markdown(report);
  }
  return {};
}

void emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write report '" + path.string() + "'");
  out << render_report(report, format);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace tda::bench
