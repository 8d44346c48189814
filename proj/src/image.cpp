#include "grapl/image.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grapl {

Image::Image(int w, int h, int c, double fill)
    : width(w), height(h), channels(c),
      data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill) {}

void Image::validate() const {
    if (width <= 0 || height <= 0 || channels <= 0) {
        throw PreconditionError("image has a zero dimension");
    }
    if (data.size() != static_cast<std::size_t>(width) * height * channels) {
        throw PreconditionError("image data length does not match width*height*channels");
    }
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw PreconditionError("image intensity outside [0,1]");
        }
    }
}

SegmentationMap::SegmentationMap(int w, int h, int fill)
    : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

std::set<int> SegmentationMap::label_set() const { return {labels.begin(), labels.end()}; }

SegmentationMap upsample_nearest(const SegmentationMap& map, int target_w, int target_h) {
    if (map.width <= 0 || map.height <= 0 || map.labels.empty()) {
        throw PreconditionError("upsample_nearest: empty source map");
    }
    if (target_w < 1 || target_h < 1) {
        throw PreconditionError("upsample_nearest: target size must be >= 1");
    }
    std::vector<int> src_x(target_w), src_y(target_h);
    for (int x = 0; x < target_w; ++x) {
        auto sx = static_cast<int>(std::floor((x + 0.5) * map.width / target_w));
        src_x[x] = std::clamp(sx, 0, map.width - 1);
    }
    for (int y = 0; y < target_h; ++y) {
        auto sy = static_cast<int>(std::floor((y + 0.5) * map.height / target_h));
        src_y[y] = std::clamp(sy, 0, map.height - 1);
    }
    SegmentationMap out(target_w, target_h);
    for (int y = 0; y < target_h; ++y) {
        for (int x = 0; x < target_w; ++x) {
            out.at(x, y) = map.at(src_x[x], src_y[y]);
        }
    }
    return out;
}

const std::array<Rgb, 256>& label_palette() {
    static const std::array<Rgb, 256> palette = [] {
        std::array<Rgb, 256> p{};
        // Bit-interleaved palette (same construction as the PASCAL VOC color map).
        for (int i = 0; i < 256; ++i) {
            int r = 0, g = 0, b = 0, c = i;
            for (int j = 0; j < 8; ++j) {
                r |= ((c >> 0) & 1) << (7 - j);
                g |= ((c >> 1) & 1) << (7 - j);
                b |= ((c >> 2) & 1) << (7 - j);
                c >>= 3;
            }
            p[i] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
        }
        return p;
    }();
    return palette;
}

Image render_overlay(const Image& image, const SegmentationMap& map, double alpha) {
    if (image.width != map.width || image.height != map.height) {
        throw PreconditionError("render_overlay: image and label map sizes differ");
    }
    const auto& palette = label_palette();
    Image out(image.width, image.height, 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const Rgb& color = palette[static_cast<std::size_t>(std::clamp(map.at(x, y), 0, 255))];
            for (int ch = 0; ch < 3; ++ch) {
                double base = image.at(x, y, image.channels == 1 ? 0 : ch);
                out.at(x, y, ch) = (1.0 - alpha) * base + alpha * (color[ch] / 255.0);
            }
        }
    }
    return out;
}

}  // namespace grapl
