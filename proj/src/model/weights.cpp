#include "tda/model.hpp"

#include <cmath>
#include <string>

#include "tda/error.hpp"

namespace tda {

namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

class TensorTaker {
 public:
  explicit TensorTaker(TensorMap& tensors) : tensors_(tensors) {}

  TensorEntry take(const std::string& name, std::vector<std::size_t> expected, const char* label) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw LoadError("missing tensor '" + name + "'");
    if (it->second.shape != expected) {
      throw LoadError("shape mismatch for '" + name + "': expected " + label + " = " + shape_string(expected) +
                      ", got " + shape_string(it->second.shape));
    }
    TensorEntry entry = std::move(it->second);
    tensors_.erase(it);
    return entry;
  }

  Matrix matrix(const std::string& name, std::size_t rows, std::size_t cols, const char* label) {
    TensorEntry e = take(name, {rows, cols}, label);
    return Matrix(rows, cols, std::move(e.data));
  }

  Vector vector(const std::string& name, std::size_t len) { return take(name, {len}, "(d_model)").data; }

 private:
  TensorMap& tensors_;
};

std::string layer_key(std::size_t i, const char* suffix) { return "layers." + std::to_string(i) + "." + suffix; }

}  // namespace

void LayerWeights::compute_derived() {
  down_col_norms.assign(ffn_down.cols(), 0.0f);
  for (std::size_t r = 0; r < ffn_down.rows(); ++r) {
    const auto row = ffn_down.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) down_col_norms[c] += row[c] * row[c];
  }
  for (float& v : down_col_norms) v = std::sqrt(v);
}

ModelWeights ModelWeights::from_tensors(const ModelConfig& config, TensorMap tensors) {
  config.validate();
  const std::size_t dm = config.d_model;
  const std::size_t dff = config.d_ff;
  const std::size_t vocab = config.vocab_size;

  TensorTaker take(tensors);
  ModelWeights w;
  w.config = config;
  w.embed = take.matrix("embed.weight", vocab, dm, "(vocab_size, d_model)");
  w.layers.resize(config.n_layers);
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    LayerWeights& l = w.layers[i];
    l.attn_q = take.matrix(layer_key(i, "attn.q.weight"), dm, dm, "(d_model, d_model)");
    l.attn_k = take.matrix(layer_key(i, "attn.k.weight"), dm, dm, "(d_model, d_model)");
    l.attn_v = take.matrix(layer_key(i, "attn.v.weight"), dm, dm, "(d_model, d_model)");
    l.attn_o = take.matrix(layer_key(i, "attn.o.weight"), dm, dm, "(d_model, d_model)");
    l.ffn_gate = take.matrix(layer_key(i, "ffn.gate.weight"), dff, dm, "(d_ff, d_model)");
    l.ffn_up = take.matrix(layer_key(i, "ffn.up.weight"), dff, dm, "(d_ff, d_model)");
    l.ffn_down = take.matrix(layer_key(i, "ffn.down.weight"), dm, dff, "(d_model, d_ff)");
    l.norm1 = take.vector(layer_key(i, "norm1.gain"), dm);
    l.norm2 = take.vector(layer_key(i, "norm2.gain"), dm);
    l.compute_derived();
  }
  w.final_norm = take.vector("final_norm.gain", dm);
  w.lm_head = take.matrix("lm_head.weight", vocab, dm, "(vocab_size, d_model)");
  return w;
}

TensorMap ModelWeights::to_tensors() const {
  TensorMap t;
  auto put_matrix = [&t](const std::string& name, const Matrix& m) {
    t[name] = TensorEntry{{m.rows(), m.cols()}, {m.data().begin(), m.data().end()}};
  };
  auto put_vector = [&t](const std::string& name, const Vector& v) { t[name] = TensorEntry{{v.size()}, v}; };
  put_matrix("embed.weight", embed);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerWeights& l = layers[i];
    put_matrix(layer_key(i, "attn.q.weight"), l.attn_q);
    put_matrix(layer_key(i, "attn.k.weight"), l.attn_k);
    put_matrix(layer_key(i, "attn.v.weight"), l.attn_v);
    put_matrix(layer_key(i, "attn.o.weight"), l.attn_o);
    put_matrix(layer_key(i, "ffn.gate.weight"), l.ffn_gate);
    put_matrix(layer_key(i, "ffn.up.weight"), l.ffn_up);
    put_matrix(layer_key(i, "ffn.down.weight"), l.ffn_down);
    put_vector(layer_key(i, "norm1.gain"), l.norm1);
    put_vector(layer_key(i, "norm2.gain"), l.norm2);
  }
  put_vector("final_norm.gain", final_norm);
  put_matrix("lm_head.weight", lm_head);
  return t;
}

ModelWeights load_weights(const std::filesystem::path& path, const ModelConfig& config) {
  return ModelWeights::from_tensors(config, read_tensor_file(path));
}

void save_weights(const std::filesystem::path& path, const ModelWeights& weights) {
  write_tensor_file(path, weights.to_tensors());
}

}  // namespace tda
