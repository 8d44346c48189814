#pragma once

#include "grapl/image.hpp"

#include <vector>

namespace grapl {

struct SlicParams {
    int k = 14;                 // target superpixel count
    double compactness = 1.0;   // spatial weight m
    int iterations = 10;
};

/// Per-pixel feature vectors (interleaved) that SLIC clusters together with (x, y).
struct FeatureImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    const double* at(int x, int y) const { return data.data() + (static_cast<std::size_t>(y) * width + x) * channels; }
};

/// CIELAB (D65) from sRGB in [0,1]; single-channel images give L only.
FeatureImage to_lab(const Image& image);

/// Raw intensities multiplied by scale (e.g. 255 for 8-bit RGB features).
FeatureImage to_features(const Image& image, double scale);

/// Standard SLIC: grid-seeded centers moved to the lowest-gradient pixel of their 3x3
/// neighborhood, local k-means in 2S x 2S windows, then connectivity enforcement.
/// Labels are 1..n, each label's pixel set 4-connected.
SegmentationMap slic_segment(const FeatureImage& features, const SlicParams& params);

/// Convenience overload: SLIC in CIELAB.
SegmentationMap slic_segment(const Image& image, const SlicParams& params);

/// Merges the smallest segment into the neighbor sharing the longest boundary until at most
/// max_segments remain, then renumbers labels 1..n in row-major first-occurrence order.
SegmentationMap limit_segments(const SegmentationMap& map, int max_segments);

/// Renumbers labels 1..n by first occurrence in row-major order.
SegmentationMap compact_labels(const SegmentationMap& map);

}  // namespace grapl
