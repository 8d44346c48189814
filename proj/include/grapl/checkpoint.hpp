#pragma once

#include "grapl/network.hpp"

#include <filesystem>

namespace grapl {

/// GPLW parameter file: magic "GPLW", u32 LE version, u32 channels, patch_h, patch_w, k0,
/// u32 tensor count, then per tensor u32 rank and u32 dims, then every tensor as LE f32.
/// Learnable tensors come first in LearnableTensor order, followed by the four running statistics.
inline constexpr std::uint32_t kGplwVersion = 1;

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path);

/// Throws InputError on a malformed file. Values round-trip through f32.
NetworkParams load_checkpoint(const std::filesystem::path& path);

}  // namespace grapl
