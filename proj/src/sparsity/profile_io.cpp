#include <fstream>

#include "tda/error.hpp"
#include "tda/sparsity.hpp"

namespace tda {

void ThresholdProfile::validate(std::size_t n_layers) const {
  if (per_layer_epsilon.size() != n_layers) {
    throw ContractError("threshold profile has " + std::to_string(per_layer_epsilon.size()) +
                        " layers, model has " + std::to_string(n_layers));
  }
  for (const double e : per_layer_epsilon) {
    if (!(e >= 0.0)) throw ContractError("threshold profile: epsilon must be >= 0");
  }
}

ThresholdProfile uniform_profile(std::size_t n_layers, double epsilon) {
  ThresholdProfile p;
  p.per_layer_epsilon.assign(n_layers, epsilon);
  p.dataset_tag = "uniform";
  return p;
}

nlohmann::ordered_json to_json(const ThresholdProfile& profile) {
  nlohmann::ordered_json j;
  j["cett_target"] = profile.cett_target;
  j["per_layer_epsilon"] = profile.per_layer_epsilon;
  j["magnitude_def"] = to_string(profile.magnitude);
  j["aggregation"] = to_string(profile.aggregation);
  j["calibration"] = {{"n_tokens", profile.n_tokens},
                      {"dataset_tag", profile.dataset_tag},
                      {"constraint", to_string(profile.constraint)}};
  return j;
}

ThresholdProfile profile_from_json(const nlohmann::json& j) {
  ThresholdProfile p;
  try {
    p.cett_target = j.at("cett_target").get<double>();
    p.per_layer_epsilon = j.at("per_layer_epsilon").get<std::vector<double>>();
    p.magnitude = parse_magnitude_def(j.value("magnitude_def", std::string("output_norm")));
    p.aggregation = parse_aggregation(j.value("aggregation", std::string("flocking")));
    if (j.contains("calibration")) {
      const auto& c = j.at("calibration");
      p.n_tokens = c.value("n_tokens", std::size_t{0});
      p.dataset_tag = c.value("dataset_tag", std::string());
      p.constraint = parse_cett_constraint(c.value("constraint", std::string("mean")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("threshold profile: ") + e.what());
  } catch (const ContractError& e) {
    throw DataError(std::string("threshold profile: ") + e.what());
  }
  for (const double e : p.per_layer_epsilon) {
    if (!(e >= 0.0)) throw DataError("threshold profile: negative epsilon");
  }
  return p;
}

void write_profile(const std::filesystem::path& path, const ThresholdProfile& profile) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write profile '" + path.string() + "'");
  out << to_json(profile).dump(2) << '\n';
}

ThresholdProfile read_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open profile '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("profile '" + path.string() + "': " + e.what());
  }
  return profile_from_json(j);
}

}  // namespace tda
