#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tda {

using TokenId = std::int32_t;

// Byte-level vocabulary: ids 0..255 are raw UTF-8 bytes, 256 is BOS.
inline constexpr TokenId kBosToken = 256;
inline constexpr std::size_t kVocabMin = 257;

// Prepends BOS.
std::vector<TokenId> tokenize(std::string_view text);

// Drops special tokens; bytes are emitted verbatim.
std::string detokenize(std::span<const TokenId> tokens);

}  // namespace tda
