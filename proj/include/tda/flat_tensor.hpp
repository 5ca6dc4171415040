#pragma once

// Flat tensor container (safetensors layout, F32 only):
//   u64 little-endian header length N | N bytes of JSON header | raw payload
// The header maps tensor name -> {"dtype":"F32","shape":[...],"data_offsets":[begin,end]}
// with offsets relative to the start of the payload.

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tda {

struct TensorEntry {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  std::size_t element_count() const;
};

using TensorMap = std::map<std::string, TensorEntry>;

// Tensors are laid out in name order; output is a pure function of the map.
void write_tensor_file(const std::filesystem::path& path, const TensorMap& tensors);

// Throws LoadError on any structural problem.
TensorMap read_tensor_file(const std::filesystem::path& path);

}  // namespace tda
