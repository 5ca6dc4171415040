#include "tda/flat_tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include <json.hpp>

#include "tda/error.hpp"

namespace tda {

static_assert(std::endian::native == std::endian::little, "payload is read with memcpy; host must be little-endian");

namespace {

constexpr std::uint64_t kMaxHeaderBytes = 100u * 1024u * 1024u;

}  // namespace

std::size_t TensorEntry::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors) {
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, entry] : tensors) {
    if (entry.element_count() != entry.data.size()) {
      throw ContractError("tensor '" + name + "': shape does not match data length");
    }
    const std::uint64_t bytes = entry.data.size() * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", entry.shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string text = header.dump();
  // Pad so the payload starts 8-byte aligned.
  while ((8 + text.size()) % 8 != 0) text.push_back(' ');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  const std::uint64_t header_len = text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, entry] : tensors) {
    out.write(reinterpret_cast<const char*>(entry.data.data()),
              static_cast<std::streamsize>(entry.data.size() * sizeof(float)));
  }
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

TensorMap read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open weight file '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (file_size < 8) throw LoadError("weight file '" + path.string() + "' is truncated");

  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (header_len > kMaxHeaderBytes || 8 + header_len > file_size) {
    throw LoadError("weight file '" + path.string() + "': bad header length " + std::to_string(header_len));
  }
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("weight file '" + path.string() + "': header parse failure: " + e.what());
  }
  if (!header.is_object()) throw LoadError("weight file header is not a JSON object");

  const std::uint64_t payload_size = file_size - 8 - header_len;
  std::vector<char> payload(payload_size);
  in.read(payload.data(), static_cast<std::streamsize>(payload_size));
  if (!in) throw LoadError("weight file '" + path.string() + "': short read");

  TensorMap tensors;
  for (const auto& [name, meta] : header.items()) {
    if (name == "__metadata__") continue;
    try {
      const std::string dtype = meta.at("dtype").get<std::string>();
      if (dtype != "F32") throw LoadError("tensor '" + name + "': unsupported dtype " + dtype);
      TensorEntry entry;
      entry.shape = meta.at("shape").get<std::vector<std::size_t>>();
      const auto offsets = meta.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2 || offsets[0] > offsets[1] || offsets[1] > payload_size) {
        throw LoadError("tensor '" + name + "': data_offsets out of range");
      }
      const std::uint64_t bytes = offsets[1] - offsets[0];
      if (bytes != entry.element_count() * sizeof(float)) {
        throw LoadError("tensor '" + name + "': byte range does not match shape");
      }
      entry.data.resize(entry.element_count());
      std::memcpy(entry.data.data(), payload.data() + offsets[0], bytes);
      tensors.emplace(name, std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("tensor '" + name + "': malformed header entry: " + e.what());
    }
  }
  return tensors;
}

}  // namespace tda
