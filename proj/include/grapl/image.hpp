#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

namespace grapl {

/// Channel-interleaved, row-major image with intensities in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0);

    std::size_t index(int x, int y, int ch) const {
        return (static_cast<std::size_t>(y) * width + x) * channels + ch;
    }
    double& at(int x, int y, int ch) { return data[index(x, y, ch)]; }
    double at(int x, int y, int ch) const { return data[index(x, y, ch)]; }

    bool empty() const { return width == 0 || height == 0 || channels == 0; }

    // Throws PreconditionError when the size or intensity invariants are broken.
    void validate() const;
};

/// Per-pixel label map. Predicted maps use labels 1..K0; ground truths may use any non-negative id.
struct SegmentationMap {
    int width = 0;
    int height = 0;
    std::vector<int> labels;

    SegmentationMap() = default;
    SegmentationMap(int w, int h, int fill = 1);

    int& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
    int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }

    std::set<int> label_set() const;
};

/// Nearest-neighbour resize with center alignment: src = floor((dst + 0.5) * src_size / dst_size).
SegmentationMap upsample_nearest(const SegmentationMap& map, int target_w, int target_h);

// --- file I/O -------------------------------------------------------------

/// Reads an 8/16-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or a binary PPM/PGM.
/// Grayscale yields one channel, color yields three; alpha is dropped.
Image load_image(const std::filesystem::path& path);

void save_ppm(const Image& image, const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Fixed 256-entry palette used for every label-map PNG; entry 0 is black.
const std::array<Rgb, 256>& label_palette();

/// Writes labels as an indexed 8-bit PNG (label k -> palette entry k). Labels must be in [0,255].
void save_label_png(const SegmentationMap& map, const std::filesystem::path& path);

/// Reads a label PNG. Indexed PNGs yield palette indices, 8-bit grayscale PNGs yield gray values,
/// RGB PNGs are rejected.
SegmentationMap load_label_png(const std::filesystem::path& path);

/// Blends label colors over the image with the given alpha (0 keeps the image).
Image render_overlay(const Image& image, const SegmentationMap& map, double alpha = 0.5);

}  // namespace grapl
