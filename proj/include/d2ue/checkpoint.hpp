#pragma once

// Learner checkpoint container (all integers little-endian):
//
//   "D2UE"                     4-byte magic
//   u32 version                currently 1
//   u32 input_dim
//   u32 n_hidden, u32 hidden_dims[n_hidden]
//   u32 bottleneck_dim
//   u8  activation             0 = relu, 1 = sigmoid
//   i32 feature_layer          -1 = bottleneck
//   u64 init_seed
//   u8  trained
//   u32 n_params, then per parameter:
//       u32 name_len, name bytes, u32 rank, u32 dims[rank],
//       f64 values[prod(dims)] (IEEE-754 binary64)

#include "d2ue/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace d2ue {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_learner(const Learner& learner);
/// Throws ParseError (with byte offset) on malformed or truncated input.
Learner decode_learner(std::span<const std::uint8_t> bytes);

void save_learner(const std::filesystem::path& path, const Learner& learner);
Learner load_learner(const std::filesystem::path& path);

}  // namespace d2ue
