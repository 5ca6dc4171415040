#include <filesystem>
#include <cstring>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "tda/config.hpp"
#include "tda/error.hpp"
#include "tda/flat_tensor.hpp"
#include "tda/model.hpp"
#include "tda/tokenizer.hpp"
#include "test_util.hpp"

using namespace tda;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tda_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

std::string with_header(const std::string& json, const std::string& payload) {
  std::string out(8, '\0');
  const std::uint64_t n = json.size();
  std::memcpy(out.data(), &n, 8);
  return out + json + payload;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(FlatTensor, RoundTrip) {
  TensorMap m;
  m["b"] = {{2, 3}, {1, 2, 3, 4, 5, 6}};
  m["a"] = {{1}, {-0.5f}};
  m["empty"] = {{0}, {}};
  const fs::path p = temp_path("roundtrip.bin");
  write_tensor_file(p, m);
  const TensorMap back = read_tensor_file(p);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.at("b").shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(back.at("b").data, m["b"].data);
  EXPECT_EQ(back.at("a").data, m["a"].data);
}

TEST(FlatTensor, WriterIsDeterministic) {
  TensorMap m;
  m["x"] = {{3}, {1, 2, 3}};
  write_tensor_file(temp_path("d1.bin"), m);
  write_tensor_file(temp_path("d2.bin"), m);
  std::ifstream a(temp_path("d1.bin"), std::ios::binary), b(temp_path("d2.bin"), std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(FlatTensor, RejectsMalformedFiles) {
  const fs::path p = temp_path("bad.bin");
  write_raw(p, "abc");
  EXPECT_THROW(read_tensor_file(p), LoadError);

  write_raw(p, with_header("{not json", ""));
  EXPECT_THROW(read_tensor_file(p), LoadError);

  write_raw(p, with_header(R"({"x":{"dtype":"F16","shape":[1],"data_offsets":[0,2]}})", "ab"));
  EXPECT_NE(message_of([&] { read_tensor_file(p); }).find("dtype"), std::string::npos);

  write_raw(p, with_header(R"({"x":{"dtype":"F32","shape":[2],"data_offsets":[0,8]}})", "abcd"));
  EXPECT_THROW(read_tensor_file(p), LoadError);

  write_raw(p, with_header(R"({"x":{"dtype":"F32","shape":[3],"data_offsets":[0,8]}})", "abcdefgh"));
  EXPECT_THROW(read_tensor_file(p), LoadError);

  std::string huge(8, '\xff');
  write_raw(p, huge);
  EXPECT_THROW(read_tensor_file(p), LoadError);

  EXPECT_THROW(read_tensor_file(temp_path("does_not_exist.bin")), LoadError);
}

TEST(Weights, SaveLoadRoundTrip) {
  const ModelWeights w = test::small_model(3);
  const fs::path p = temp_path("model.bin");
  save_weights(p, w);
  const ModelWeights back = load_weights(p, w.config);
  EXPECT_EQ(back.embed, w.embed);
  EXPECT_EQ(back.lm_head, w.lm_head);
  ASSERT_EQ(back.layers.size(), w.layers.size());
  EXPECT_EQ(back.layers[1].ffn_down, w.layers[1].ffn_down);
  EXPECT_EQ(back.layers[1].down_col_norms, w.layers[1].down_col_norms);
}

TEST(Weights, NamesMissingAndMisshapedTensors) {
  const ModelWeights w = test::small_model(3);
  TensorMap t = w.to_tensors();
  t.erase("layers.1.ffn.up.weight");
  EXPECT_EQ(message_of([&] { ModelWeights::from_tensors(w.config, t); }), "missing tensor 'layers.1.ffn.up.weight'");

  t = w.to_tensors();
  t["layers.0.ffn.gate.weight"].shape = {32, 96};
  const std::string msg = message_of([&] { ModelWeights::from_tensors(w.config, t); });
  EXPECT_NE(msg.find("shape mismatch for 'layers.0.ffn.gate.weight'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("(96, 32)"), std::string::npos) << msg;
}

TEST(Config, JsonRoundTripAndValidation) {
  ModelConfig c = test::small_config();
  c.positional = PositionalEncoding::sinusoidal;
  c.activation = ActivationKind::relu_squared;
  EXPECT_EQ(config_from_json(to_json(c)), c);
  const fs::path p = temp_path("c.json");
  write_config(p, c);
  EXPECT_EQ(read_config(p), c);
  EXPECT_EQ(default_config_path("x/m.bin"), fs::path("x/m.bin.config.json"));

  ModelConfig bad = c;
  bad.n_heads = 5;
  EXPECT_THROW(bad.validate(), ContractError);
  bad = c;
  bad.vocab_size = 100;
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Tokenizer, BytesWithBos) {
  const auto ids = tokenize("Hi!");
  EXPECT_EQ(ids, (std::vector<TokenId>{kBosToken, 'H', 'i', '!'}));
  EXPECT_EQ(detokenize(ids), "Hi!");
  EXPECT_EQ(tokenize(""), (std::vector<TokenId>{kBosToken}));
  const std::string utf8 = "\xc3\xa9t\xc3\xa9";
  EXPECT_EQ(detokenize(tokenize(utf8)), utf8);
  EXPECT_EQ(tokenize(utf8).size(), utf8.size() + 1);
}
