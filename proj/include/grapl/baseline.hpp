#pragma once

#include "grapl/image.hpp"
#include "grapl/matrix.hpp"
#include "grapl/slic.hpp"

#include <string>

namespace grapl {

enum class BaselineFeatures { Rgb, Embedding };

BaselineFeatures parse_baseline_features(const std::string& name);
std::string to_string(BaselineFeatures features);

/// Bilinear interpolation of a grid_d x grid_d embedding (row-major patch order) to every pixel,
/// treating each vector as sampled at its patch center.
FeatureImage interpolate_embedding(const Matrix& embedding, int grid_d, int width, int height);

/// Default SLIC compactness per feature space: 10 for 0..255 RGB, 1 for embeddings.
double default_baseline_compactness(BaselineFeatures features);

/// SLIC over raw RGB (scaled to 0..255) or interpolated embeddings; labels 1..n.
SegmentationMap slic_baseline(const Image& image, BaselineFeatures features, int k, double compactness,
                              const Matrix* embedding = nullptr, int grid_d = 0);

}  // namespace grapl
