#include "grapl/patch_grid.hpp"

#include "grapl/errors.hpp"

#include <cmath>
#include <string>

namespace grapl {

double PatchGrid::center_distance(int p, int q) const {
    double dx = centers[p].x - centers[q].x;
    double dy = centers[p].y - centers[q].y;
    return std::sqrt(dx * dx + dy * dy);
}

PatchGrid extract_patch_grid(const Image& image, int d) {
    if (image.empty()) throw PreconditionError("extract_patch_grid: empty image");
    if (d < 1) throw PreconditionError("extract_patch_grid: d must be >= 1");
    if (d > image.width || d > image.height) {
        throw PreconditionError("extract_patch_grid: d=" + std::to_string(d) + " exceeds image dimension " +
                                std::to_string(image.width) + "x" + std::to_string(image.height));
    }
    PatchGrid grid;
    grid.d = d;
    grid.patch_w = image.width / d;
    grid.patch_h = image.height / d;
    grid.image_w = image.width;
    grid.image_h = image.height;
    if (grid.patch_w < kMinPatchSide || grid.patch_h < kMinPatchSide) {
        throw PreconditionError("extract_patch_grid: patch " + std::to_string(grid.patch_w) + "x" +
                                std::to_string(grid.patch_h) + " is too small for the network (min " +
                                std::to_string(kMinPatchSide) + ")");
    }
    grid.centers.resize(static_cast<std::size_t>(d) * d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            grid.centers[r * d + c] = {(c + 0.5) * grid.patch_w, (r + 0.5) * grid.patch_h};
        }
    }
    return grid;
}

PatchBatch gather_window(const Image& image, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || x0 + w > image.width || y0 + h > image.height) {
        throw PreconditionError("gather_window: window outside image");
    }
    PatchBatch batch{1, image.channels, h, w, {}};
    batch.data.resize(batch.patch_stride());
    for (int ch = 0; ch < image.channels; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                batch.data[(static_cast<std::size_t>(ch) * h + y) * w + x] = image.at(x0 + x, y0 + y, ch);
            }
        }
    }
    return batch;
}

PatchBatch gather_patches(const Image& image, const PatchGrid& grid) {
    if (image.width != grid.image_w || image.height != grid.image_h) {
        throw PreconditionError("gather_patches: grid was built for a different image size");
    }
    PatchBatch batch{grid.count(), image.channels, grid.patch_h, grid.patch_w, {}};
    batch.data.resize(batch.patch_stride() * grid.count());
    for (int p = 0; p < grid.count(); ++p) {
        double* dst = batch.data.data() + batch.patch_stride() * p;
        int ox = grid.origin_x(p), oy = grid.origin_y(p);
        for (int ch = 0; ch < image.channels; ++ch) {
            for (int y = 0; y < grid.patch_h; ++y) {
                for (int x = 0; x < grid.patch_w; ++x) {
                    dst[(static_cast<std::size_t>(ch) * grid.patch_h + y) * grid.patch_w + x] =
                        image.at(ox + x, oy + y, ch);
                }
            }
        }
    }
    return batch;
}

}  // namespace grapl
