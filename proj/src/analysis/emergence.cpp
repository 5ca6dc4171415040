#include "tda/emergence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "tda/analysis.hpp"
#include "tda/error.hpp"

namespace tda::emergence {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Forward {
  std::vector<double> gate;    // pre-activation of the gate branch
  std::vector<double> linear;  // swiglu linear branch
  std::vector<double> hidden;
  std::vector<double> logits;
};

void forward_one(const ToyNetwork& net, const double* x, Forward& f) {
  f.gate.assign(net.d_hidden, 0.0);
  f.linear.assign(net.d_hidden, 0.0);
  f.hidden.assign(net.d_hidden, 0.0);
  for (std::size_t j = 0; j < net.d_hidden; ++j) {
    double a = net.theta_bias[j];
    for (std::size_t k = 0; k < net.d_in; ++k) a += net.theta[j * net.d_in + k] * x[k];
    f.gate[j] = a;
    if (net.variant == ToyVariant::relu) {
      f.hidden[j] = a > 0.0 ? a : 0.0;
    } else {
      double u = net.tau_bias[j];
      for (std::size_t k = 0; k < net.d_in; ++k) u += net.tau[j * net.d_in + k] * x[k];
      f.linear[j] = u;
      f.hidden[j] = a * sigmoid(a) * u;
    }
  }
  f.logits.assign(net.classes, 0.0);
  for (std::size_t c = 0; c < net.classes; ++c) {
    for (std::size_t j = 0; j < net.d_hidden; ++j) f.logits[c] += net.v[c * net.d_hidden + j] * f.hidden[j];
  }
}

// Softmax probabilities and -log p[label].
double softmax_xent(std::vector<double>& logits, int label) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& z : logits) total += (z = std::exp(z - peak));
  for (double& z : logits) z /= total;
  return -std::log(std::max(logits[static_cast<std::size_t>(label)], 1e-300));
}

void gaussian_fill(std::vector<double>& v, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& x : v) x = dist(rng);
}

}  // namespace

std::string to_string(ToyVariant v) { return v == ToyVariant::relu ? "relu" : "swiglu"; }

ToyVariant parse_variant(std::string_view s) {
  if (s == "relu") return ToyVariant::relu;
  if (s == "swiglu") return ToyVariant::swiglu;
  throw ContractError("unknown toy variant '" + std::string(s) + "'");
}

std::vector<std::vector<double>*> ToyNetwork::blocks() { return {&theta, &theta_bias, &tau, &tau_bias, &v}; }
std::vector<const std::vector<double>*> ToyNetwork::blocks() const {
  return {&theta, &theta_bias, &tau, &tau_bias, &v};
}

ToyNetwork init_toy_network(ToyVariant variant, std::size_t d_in, std::size_t d_hidden, std::size_t classes,
                            std::mt19937_64& rng) {
  if (d_in == 0 || d_hidden == 0 || classes < 2) throw ContractError("toy network: bad dimensions");
  ToyNetwork net;
  net.variant = variant;
  net.d_in = d_in;
  net.d_hidden = d_hidden;
  net.classes = classes;
  net.theta.resize(d_hidden * d_in);
  net.theta_bias.assign(d_hidden, 0.0);
  gaussian_fill(net.theta, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
  if (variant == ToyVariant::swiglu) {
    net.tau.resize(d_hidden * d_in);
    net.tau_bias.assign(d_hidden, 0.0);
    gaussian_fill(net.tau, 1.0 / std::sqrt(static_cast<double>(d_in)), rng);
  }
  net.v.resize(classes * d_hidden);
  gaussian_fill(net.v, 1.0 / std::sqrt(static_cast<double>(d_hidden)), rng);
  const double mean = std::accumulate(net.v.begin(), net.v.end(), 0.0) / static_cast<double>(net.v.size());
  for (double& x : net.v) x -= mean;
  return net;
}

double toy_loss(const ToyNetwork& net, const ToyBatch& batch) {
  if (batch.size() == 0) throw ContractError("toy_loss: empty batch");
  Forward f;
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward_one(net, batch.x.data() + n * net.d_in, f);
    total += softmax_xent(f.logits, batch.y[n]);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<std::vector<double>> toy_gradients(const ToyNetwork& net, const ToyBatch& batch, double* loss) {
  if (batch.size() == 0) throw ContractError("toy_gradients: empty batch");
  std::vector<std::vector<double>> grads;
  for (const auto* b : net.blocks()) grads.emplace_back(b->size(), 0.0);
  auto& g_theta = grads[0];
  auto& g_theta_bias = grads[1];
  auto& g_tau = grads[2];
  auto& g_tau_bias = grads[3];
  auto& g_v = grads[4];

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  Forward f;
  std::vector<double> d_hidden(net.d_hidden);
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const double* x = batch.x.data() + n * net.d_in;
    forward_one(net, x, f);
    total += softmax_xent(f.logits, batch.y[n]);
    // d loss / d logits = p - onehot
    f.logits[static_cast<std::size_t>(batch.y[n])] -= 1.0;
    std::fill(d_hidden.begin(), d_hidden.end(), 0.0);
    for (std::size_t c = 0; c < net.classes; ++c) {
      const double dz = f.logits[c] * inv_n;
      for (std::size_t j = 0; j < net.d_hidden; ++j) {
        g_v[c * net.d_hidden + j] += dz * f.hidden[j];
        d_hidden[j] += dz * net.v[c * net.d_hidden + j];
      }
    }
    for (std::size_t j = 0; j < net.d_hidden; ++j) {
      const double a = f.gate[j];
      double d_gate = 0.0;
      if (net.variant == ToyVariant::relu) {
        d_gate = a > 0.0 ? d_hidden[j] : 0.0;
      } else {
        const double s = sigmoid(a);
        const double swish = a * s;
        const double d_swish = s + a * s * (1.0 - s);
        d_gate = d_hidden[j] * f.linear[j] * d_swish;
        const double d_lin = d_hidden[j] * swish;
        g_tau_bias[j] += d_lin;
        for (std::size_t k = 0; k < net.d_in; ++k) g_tau[j * net.d_in + k] += d_lin * x[k];
      }
      g_theta_bias[j] += d_gate;
      for (std::size_t k = 0; k < net.d_in; ++k) g_theta[j * net.d_in + k] += d_gate * x[k];
    }
  }
  if (loss != nullptr) *loss = total * inv_n;
  return grads;
}

ActivationStats activation_stats(const ToyNetwork& net, const ToyBatch& batch, double near_zero) {
  Forward f;
  double pos_sum = 0.0;
  std::size_t pos_count = 0, small = 0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    forward_one(net, batch.x.data() + n * net.d_in, f);
    for (std::size_t j = 0; j < net.d_hidden; ++j) {
      if (f.gate[j] > 0.0) {
        pos_sum += f.gate[j];
        ++pos_count;
      }
      if (std::fabs(f.hidden[j]) < near_zero) ++small;
    }
  }
  ActivationStats s;
  s.mean_positive_preactivation = pos_count == 0 ? 0.0 : pos_sum / static_cast<double>(pos_count);
  s.near_zero_fraction = static_cast<double>(small) / static_cast<double>(batch.size() * net.d_hidden);
  return s;
}

void make_cluster_data(const EmergenceConfig& config, ToyBatch& train, ToyBatch& holdout) {
  std::mt19937_64 rng(config.seed);
  std::vector<double> means(config.classes * config.d_in);
  gaussian_fill(means, config.cluster_spread, rng);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<int> label(0, static_cast<int>(config.classes) - 1);
  auto fill = [&](ToyBatch& b, std::size_t n) {
    b.d_in = config.d_in;
    b.x.resize(n * config.d_in);
    b.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = label(rng);
      b.y[i] = c;
      for (std::size_t k = 0; k < config.d_in; ++k) {
        b.x[i * config.d_in + k] = means[static_cast<std::size_t>(c) * config.d_in + k] + noise(rng);
      }
    }
  };
  fill(train, config.train_size);
  fill(holdout, config.holdout_size);
}

SparsityTrajectory emergence_experiment(const EmergenceConfig& config, ToyVariant variant) {
  if (config.batch_size == 0 || config.train_size == 0 || config.holdout_size == 0 || config.record_every == 0) {
    throw ContractError("emergence: sizes must be positive");
  }
  ToyBatch train, holdout;
  make_cluster_data(config, train, holdout);
  // Network init and minibatch order use a stream separate from the data.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  ToyNetwork net = init_toy_network(variant, config.d_in, config.d_hidden, config.classes, rng);

  SparsityTrajectory traj;
  traj.variant = variant;
  auto record = [&](std::size_t step) {
    const ActivationStats s = activation_stats(net, holdout, config.near_zero);
    traj.points.push_back({step, s.mean_positive_preactivation, s.near_zero_fraction, toy_loss(net, holdout)});
  };
  record(0);

  std::uniform_int_distribution<std::size_t> pick(0, config.train_size - 1);
  ToyBatch batch;
  batch.d_in = config.d_in;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    batch.x.resize(config.batch_size * config.d_in);
    batch.y.resize(config.batch_size);
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      const std::size_t src = pick(rng);
      std::copy_n(train.x.begin() + static_cast<std::ptrdiff_t>(src * config.d_in), config.d_in,
                  batch.x.begin() + static_cast<std::ptrdiff_t>(i * config.d_in));
      batch.y[i] = train.y[src];
    }
    double loss = 0.0;
    const auto grads = toy_gradients(net, batch, &loss);
    if (!std::isfinite(loss)) {
      traj.diverged_at = step;
      return traj;
    }
    auto params = net.blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b]->size(); ++i) (*params[b])[i] -= config.lr * grads[b][i];
    }
    if (step % config.record_every == 0 || step == config.steps) record(step);
  }
  return traj;
}

void write_trajectory_csv(const std::filesystem::path& path, const SparsityTrajectory& trajectory) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "step,mean_pos_magnitude,near_zero_fraction\n";
  for (const auto& p : trajectory.points) {
    out << p.step << ',' << analysis::format_number(p.mean_pos_magnitude) << ','
        << analysis::format_number(p.near_zero_fraction) << '\n';
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace tda::emergence
