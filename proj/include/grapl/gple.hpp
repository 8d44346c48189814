#pragma once

#include "grapl/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <utility>

namespace grapl {

/// GPLE per-patch embedding file: magic "GPLE", u32 LE version (1), u32 grid_d, u32 dim,
/// then grid_d^2 x dim little-endian f32 values in row-major patch order.
inline constexpr std::uint32_t kGpleVersion = 1;

/// Loads the embeddings as a grid_d^2 x dim matrix. Throws InputError on a bad magic, version,
/// size, or a grid side different from expected_d (pass 0 to accept any side).
Matrix load_gple(const std::filesystem::path& path, int expected_d = 0);

/// Reads only the header; returns {grid_d, dim}.
std::pair<int, int> read_gple_header(const std::filesystem::path& path);

/// Writes a GPLE file; rows must equal grid_d^2.
void save_gple(const Matrix& embedding, int grid_d, const std::filesystem::path& path);

}  // namespace grapl
