#include "grapl/baseline.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace grapl {

BaselineFeatures parse_baseline_features(const std::string& name) {
    if (name == "rgb") return BaselineFeatures::Rgb;
    if (name == "embedding") return BaselineFeatures::Embedding;
    throw PreconditionError("unknown baseline features '" + name + "'");
}

std::string to_string(BaselineFeatures features) { return features == BaselineFeatures::Rgb ? "rgb" : "embedding"; }

FeatureImage interpolate_embedding(const Matrix& embedding, int grid_d, int width, int height) {
    if (grid_d < 1 || embedding.rows != grid_d * grid_d || embedding.cols < 1) {
        throw PreconditionError("interpolate_embedding: embedding does not match the grid");
    }
    if (width < 1 || height < 1) throw PreconditionError("interpolate_embedding: empty target size");
    FeatureImage f{width, height, embedding.cols, {}};
    f.data.resize(static_cast<std::size_t>(width) * height * embedding.cols);
    auto axis = [grid_d](int i, int size, int& lo, int& hi, double& t) {
        const double g = std::clamp((i + 0.5) * grid_d / size - 0.5, 0.0, grid_d - 1.0);
        lo = static_cast<int>(std::floor(g));
        hi = std::min(lo + 1, grid_d - 1);
        t = g - lo;
    };
    for (int y = 0; y < height; ++y) {
        int y0, y1;
        double ty;
        axis(y, height, y0, y1, ty);
        for (int x = 0; x < width; ++x) {
            int x0, x1;
            double tx;
            axis(x, width, x0, x1, tx);
            const auto a = embedding.row(y0 * grid_d + x0), b = embedding.row(y0 * grid_d + x1);
            const auto c = embedding.row(y1 * grid_d + x0), d = embedding.row(y1 * grid_d + x1);
            double* out = f.data.data() + (static_cast<std::size_t>(y) * width + x) * embedding.cols;
            for (int k = 0; k < embedding.cols; ++k) {
                out[k] = (1 - ty) * ((1 - tx) * a[k] + tx * b[k]) + ty * ((1 - tx) * c[k] + tx * d[k]);
            }
        }
    }
    return f;
}

double default_baseline_compactness(BaselineFeatures features) {
    return features == BaselineFeatures::Rgb ? 10.0 : 1.0;
}

SegmentationMap slic_baseline(const Image& image, BaselineFeatures features, int k, double compactness,
                              const Matrix* embedding, int grid_d) {
    SlicParams params;
    params.k = k;
    params.compactness = compactness;
    if (features == BaselineFeatures::Rgb) return slic_segment(to_features(image, 255.0), params);
    if (embedding == nullptr) throw PreconditionError("slic_baseline: embedding features need an embedding");
    return slic_segment(interpolate_embedding(*embedding, grid_d, image.width, image.height), params);
}

}  // namespace grapl
