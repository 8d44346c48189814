#pragma once

#include "grapl/image.hpp"

#include <vector>

namespace grapl {

struct PatchCenter {
    double x = 0.0;
    double y = 0.0;
};

/// Non-overlapping d x d tiling of the (right/bottom cropped) image. Patches are indexed
/// row-major: patch (r, c) has index r * d + c.
struct PatchGrid {
    int d = 0;
    int patch_w = 0;
    int patch_h = 0;
    int image_w = 0;  // original image size, before cropping
    int image_h = 0;
    std::vector<PatchCenter> centers;

    int count() const { return d * d; }
    int row_of(int p) const { return p / d; }
    int col_of(int p) const { return p % d; }
    int origin_x(int p) const { return col_of(p) * patch_w; }
    int origin_y(int p) const { return row_of(p) * patch_h; }
    int cropped_w() const { return d * patch_w; }
    int cropped_h() const { return d * patch_h; }
    double center_distance(int p, int q) const;
};

/// Smallest patch side that survives two unpadded 3x3 convolutions.
inline constexpr int kMinPatchSide = 5;

/// Builds the d x d grid. Throws PreconditionError if d < 1, d exceeds an image
/// dimension, or a patch side would be below kMinPatchSide.
PatchGrid extract_patch_grid(const Image& image, int d);

/// Planar patch tensor [patch][channel][row][col], the network's batch layout.
struct PatchBatch {
    int count = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    std::size_t patch_stride() const { return static_cast<std::size_t>(channels) * height * width; }
};

PatchBatch gather_patches(const Image& image, const PatchGrid& grid);

/// A single window of the image with top-left (x, y), in batch layout.
PatchBatch gather_window(const Image& image, int x, int y, int w, int h);

}  // namespace grapl
