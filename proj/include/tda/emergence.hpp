#pragma once

// One-hidden-layer classifier f(x) = V·act(p(x)) trained with plain SGD on
// Gaussian clusters, used to watch how positive activations and the share of
// near-zero hidden units evolve under ReLU versus SwiGLU. Gradients are
// written out by hand (double precision).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tda::emergence {

enum class ToyVariant { relu, swiglu };

std::string to_string(ToyVariant v);
ToyVariant parse_variant(std::string_view s);

struct ToyNetwork {
  ToyVariant variant = ToyVariant::relu;
  std::size_t d_in = 0, d_hidden = 0, classes = 0;
  std::vector<double> theta;       // d_hidden x d_in, gate branch
  std::vector<double> theta_bias;  // d_hidden
  std::vector<double> tau;         // d_hidden x d_in, linear branch (swiglu only)
  std::vector<double> tau_bias;    // d_hidden (swiglu only)
  std::vector<double> v;           // classes x d_hidden, zero-mean at init

  // Parameter blocks in a fixed order: theta, theta_bias, tau, tau_bias, v.
  std::vector<std::vector<double>*> blocks();
  std::vector<const std::vector<double>*> blocks() const;
};

ToyNetwork init_toy_network(ToyVariant variant, std::size_t d_in, std::size_t d_hidden, std::size_t classes,
                            std::mt19937_64& rng);

struct ToyBatch {
  std::size_t d_in = 0;
  std::vector<double> x;  // n x d_in
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
};

// Mean cross-entropy.
double toy_loss(const ToyNetwork& net, const ToyBatch& batch);

// Gradient of toy_loss, shaped like net.blocks().
std::vector<std::vector<double>> toy_gradients(const ToyNetwork& net, const ToyBatch& batch, double* loss = nullptr);

struct ActivationStats {
  // Mean of the gate pre-activation over its positive entries.
  double mean_positive_preactivation = 0.0;
  // Share of hidden outputs with |value| < near_zero.
  double near_zero_fraction = 0.0;
};

ActivationStats activation_stats(const ToyNetwork& net, const ToyBatch& batch, double near_zero = 1e-3);

struct EmergenceConfig {
  std::size_t d_in = 16;
  std::size_t d_hidden = 64;
  std::size_t classes = 3;
  std::size_t steps = 2000;
  double lr = 0.1;
  std::uint64_t seed = 1;
  std::size_t batch_size = 32;
  std::size_t train_size = 1024;
  std::size_t holdout_size = 512;
  std::size_t record_every = 50;
  double cluster_spread = 2.0;  // stddev of the class means
  double near_zero = 1e-3;
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double mean_pos_magnitude = 0.0;
  double near_zero_fraction = 0.0;
  double loss = 0.0;  // held-out
};

struct SparsityTrajectory {
  ToyVariant variant = ToyVariant::relu;
  std::vector<TrajectoryPoint> points;
  std::optional<std::size_t> diverged_at;
};

// Clusters are drawn from `seed`; both variants see identical data for a seed.
void make_cluster_data(const EmergenceConfig& config, ToyBatch& train, ToyBatch& holdout);

SparsityTrajectory emergence_experiment(const EmergenceConfig& config, ToyVariant variant);

void write_trajectory_csv(const std::filesystem::path& path, const SparsityTrajectory& trajectory);

}  // namespace tda::emergence
