#pragma once

#include "gesturelab/nn.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace gesturelab::nn {

// MGW1 layout (all little-endian):
//   "MGW1" | u32 version=1 | u32 layer_count
//   per layer: u32 in | u32 out | u32 activation tag | f64 dropout rate
//   per layer: weights (out x in, row-major) f64 | bias (out) f64
inline constexpr std::string_view kCheckpointMagic = "MGW1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const DenseNet& net);
DenseNet decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const DenseNet& net);
DenseNet load_checkpoint(const std::filesystem::path& path);

}  // namespace gesturelab::nn
