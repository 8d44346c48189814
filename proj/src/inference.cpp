#include "grapl/inference.hpp"

namespace grapl {

SegmentationMap argmax_labels(const LogitMap& logits) {
    SegmentationMap map(logits.width, logits.height, 1);
    for (int y = 0; y < logits.height; ++y) {
        for (int x = 0; x < logits.width; ++x) {
            int best = 0;
            for (int k = 1; k < logits.k0; ++k) {
                if (logits.at(k, y, x) > logits.at(best, y, x)) best = k;
            }
            map.at(x, y) = best + 1;
        }
    }
    return map;
}

SegmentationMap segment(const NetworkParams& params, const Image& image) {
    return upsample_nearest(argmax_labels(forward_full(params, image)), image.width, image.height);
}

}  // namespace grapl
