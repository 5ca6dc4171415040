#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "tda/error.hpp"
#include "tda/simd.hpp"
#include "tda/sparsity.hpp"

namespace tda {

namespace {

struct CalibrationToken {
  Vector hidden;
  Vector magnitudes;
  double out_norm = 0.0;
};

class CettEvaluator {
 public:
  CettEvaluator(const LayerWeights& layer, ActivationKind kind, std::span<const Vector> calibration, MagnitudeDef def)
      : layer_(layer) {
    for (const Vector& x : calibration) {
      CalibrationToken tok;
      tok.hidden = gated_hidden(layer, kind, x);
      tok.magnitudes.resize(tok.hidden.size());
      magnitudes_from_hidden(layer, tok.hidden, def, tok.magnitudes);
      tok.out_norm = norm_of(matvec(layer.ffn_down, tok.hidden));
      if (tok.out_norm == 0.0) continue;  // CETT undefined for this token
      max_magnitude_ = std::max(max_magnitude_, static_cast<double>(*std::max_element(tok.magnitudes.begin(), tok.magnitudes.end())));
      tokens_.push_back(std::move(tok));
    }
    tail_.resize(layer.ffn_down.cols());
    out_.resize(layer.ffn_down.rows());
  }

  std::size_t token_count() const noexcept { return tokens_.size(); }
  double max_magnitude() const noexcept { return max_magnitude_; }

  // Mean or max over tokens of CETT(x, epsilon).
  double evaluate(double epsilon, CettConstraint constraint) {
    double acc = 0.0;
    for (const CalibrationToken& tok : tokens_) {
      bool any = false;
      for (std::size_t i = 0; i < tail_.size(); ++i) {
        const bool in_tail = tok.magnitudes[i] < epsilon;
        tail_[i] = in_tail ? tok.hidden[i] : 0.0f;
        any = any || in_tail;
      }
      double value = 0.0;
      if (any) {
        matvec_into(layer_.ffn_down, tail_, out_);
        value = norm_of(out_) / tok.out_norm;
      }
      acc = constraint == CettConstraint::mean ? acc + value : std::max(acc, value);
    }
    return constraint == CettConstraint::mean ? acc / static_cast<double>(tokens_.size()) : acc;
  }

 private:
  static double norm_of(std::span<const float> v) {
    double s = 0.0;
    for (const float x : v) s += static_cast<double>(x) * x;
    return std::sqrt(s);
  }

  const LayerWeights& layer_;
  std::vector<CalibrationToken> tokens_;
  double max_magnitude_ = 0.0;
  Vector tail_;
  Vector out_;
};

}  // namespace

ThresholdSearchResult search_threshold(const LayerWeights& layer, ActivationKind kind,
                                       std::span<const Vector> calibration, const ThresholdSearchOptions& options) {
  if (calibration.empty()) throw ContractError("search_threshold: empty calibration set");
  if (!(options.cett_target > 0.0 && options.cett_target < 1.0)) {
    throw ContractError("search_threshold: cett_target must lie in (0, 1)");
  }
  if (!(options.rel_tol > 0.0)) throw ContractError("search_threshold: rel_tol must be positive");

  CettEvaluator eval(layer, kind, calibration, options.magnitude);
  if (eval.token_count() == 0 || eval.max_magnitude() == 0.0) {
    throw DegenerateCalibrationError("search_threshold: calibration activations are all zero");
  }
  auto feasible = [&](double eps) { return eval.evaluate(eps, options.constraint) <= options.cett_target; };

  ThresholdSearchResult result;
  result.tokens_used = eval.token_count();

  constexpr int kGrid = 16;
  bool seen_infeasible = false;
  for (int g = 0; g <= kGrid; ++g) {
    const bool ok = feasible(eval.max_magnitude() * g / kGrid);
    if (ok && seen_infeasible) result.monotone_on_grid = false;
    seen_infeasible = seen_infeasible || !ok;
  }

  double lo = 0.0;
  double hi = eval.max_magnitude();
  if (feasible(hi)) {
    lo = hi;
  } else {
    while (hi - lo > options.rel_tol * hi && result.iterations < options.max_iterations) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
      ++result.iterations;
    }
  }
  result.epsilon = lo;
  result.cett_at_epsilon = eval.evaluate(lo, options.constraint);
  return result;
}

ThresholdProfile calibrate_profile(const ModelWeights& weights, std::span<const PrefillTrace> traces,
                                   const ThresholdSearchOptions& options, const std::string& dataset_tag,
                                   std::size_t threads, std::vector<ThresholdSearchResult>* details) {
  const std::size_t n_layers = weights.config.n_layers;
  std::size_t n_tokens = 0;
  for (const PrefillTrace& t : traces) {
    if (t.n_layers() != n_layers) throw ContractError("calibrate_profile: trace layer count mismatch");
    n_tokens += t.n_tokens();
  }
  if (n_tokens == 0) throw ContractError("calibrate_profile: no calibration tokens");

  std::vector<ThresholdSearchResult> results(n_layers);
  std::vector<std::exception_ptr> errors(n_layers);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t l = next++; l < n_layers; l = next++) {
      try {
        std::vector<Vector> calibration;
        calibration.reserve(n_tokens);
        for (const PrefillTrace& t : traces) {
          for (std::size_t i = 0; i < t.n_tokens(); ++i) {
            const auto x = t.ffn_input(l, i);
            calibration.emplace_back(x.begin(), x.end());
          }
        }
        results[l] = search_threshold(weights.layers[l], weights.config.activation, calibration, options);
      } catch (...) {
        errors[l] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::clamp<std::size_t>(threads, 1, n_layers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ThresholdProfile profile;
  profile.cett_target = options.cett_target;
  profile.magnitude = options.magnitude;
  profile.constraint = options.constraint;
  profile.n_tokens = n_tokens;
  profile.dataset_tag = dataset_tag;
  for (const auto& r : results) profile.per_layer_epsilon.push_back(r.epsilon);
  if (details != nullptr) *details = std::move(results);
  return profile;
}

}  // namespace tda
