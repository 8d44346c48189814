#pragma once

#include "grapl/image.hpp"
#include "grapl/network.hpp"

namespace grapl {

/// Per-location argmax (lowest label on ties), labels 1..k0, at logit-map resolution.
SegmentationMap argmax_labels(const LogitMap& logits);

/// Fully convolutional pass, argmax, then nearest-neighbor upsampling to the image size.
SegmentationMap segment(const NetworkParams& params, const Image& image);

}  // namespace grapl
