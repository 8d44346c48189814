#include "grapl/slic.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

namespace grapl {

namespace {

double srgb_to_linear(double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3 * delta * delta) + 4.0 / 29.0;
}

struct GridShape {
    int nx = 1;
    int ny = 1;
};

// Center grid whose cell count is close to k and whose cells are close to square.
GridShape choose_grid(int width, int height, int k) {
    GridShape best;
    double best_score = std::numeric_limits<double>::infinity();
    for (int nx = 1; nx <= std::min(k, width); ++nx) {
        int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(k) / nx)));
        if (ny > height) continue;
        double count_err = std::abs(nx * ny - k) / static_cast<double>(k);
        double aspect = std::abs(std::log((static_cast<double>(width) / nx) / (static_cast<double>(height) / ny)));
        double score = count_err + aspect;
        // ties go to more columns
        if (score <= best_score + 1e-12) {
            best_score = score;
            best = {nx, ny};
        }
    }
    return best;
}

struct Center {
    double x = 0.0;
    double y = 0.0;
    std::vector<double> f;
};

double feature_dist2(const double* a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

double gradient_at(const FeatureImage& img, int x, int y) {
    int xl = std::max(0, x - 1), xr = std::min(img.width - 1, x + 1);
    int yu = std::max(0, y - 1), yd = std::min(img.height - 1, y + 1);
    double g = 0.0;
    for (int c = 0; c < img.channels; ++c) {
        double gx = img.at(xr, y)[c] - img.at(xl, y)[c];
        double gy = img.at(x, yd)[c] - img.at(x, yu)[c];
        g += gx * gx + gy * gy;
    }
    return g;
}

// Splits labels into 4-connected components, then repeatedly merges the smallest component
// below min_size into the adjacent region with the nearest mean feature. Merging by feature
// keeps fragments from chaining across a color edge when low compactness leaves many of them.
SegmentationMap enforce_connectivity(const SegmentationMap& in, const FeatureImage& img, int min_size) {
    const int w = in.width, h = in.height, ch = img.channels;
    std::vector<int> comp(static_cast<std::size_t>(w) * h, -1);
    std::vector<long long> size;
    std::vector<double> sum;  // [component][channel]
    std::vector<int> queue;
    queue.reserve(comp.size());
    const int dx[4] = {-1, 0, 1, 0};
    const int dy[4] = {0, -1, 0, 1};
    for (int start = 0; start < w * h; ++start) {
        if (comp[start] >= 0) continue;
        const int id = static_cast<int>(size.size()), source = in.labels[start];
        size.push_back(0);
        sum.resize(sum.size() + ch, 0.0);
        queue.assign(1, start);
        comp[start] = id;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const int px = queue[head] % w, py = queue[head] / w;
            ++size[id];
            const double* f = img.at(px, py);
            for (int c = 0; c < ch; ++c) sum[static_cast<std::size_t>(id) * ch + c] += f[c];
            for (int n = 0; n < 4; ++n) {
                const int nx = px + dx[n], ny = py + dy[n];
                if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                const int j = ny * w + nx;
                if (comp[j] < 0 && in.labels[j] == source) {
                    comp[j] = id;
                    queue.push_back(j);
                }
            }
        }
    }
    const int n = static_cast<int>(size.size());
    std::vector<std::vector<int>> adj(n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int a = comp[y * w + x];
            if (x + 1 < w && comp[y * w + x + 1] != a) {
                adj[a].push_back(comp[y * w + x + 1]);
                adj[comp[y * w + x + 1]].push_back(a);
            }
            if (y + 1 < h && comp[(y + 1) * w + x] != a) {
                adj[a].push_back(comp[(y + 1) * w + x]);
                adj[comp[(y + 1) * w + x]].push_back(a);
            }
        }
    }
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](int i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    using Entry = std::pair<long long, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> small;
    for (int i = 0; i < n; ++i)
        if (size[i] < min_size) small.emplace(size[i], i);
    while (!small.empty()) {
        const auto [sz, a] = small.top();
        small.pop();
        if (find(a) != a || size[a] != sz) continue;
        int target = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int& b : adj[a]) {
            b = find(b);
            if (b == a) continue;
            double d2 = 0.0;
            for (int c = 0; c < ch; ++c) {
                const double t = sum[static_cast<std::size_t>(a) * ch + c] / size[a] -
                                 sum[static_cast<std::size_t>(b) * ch + c] / size[b];
                d2 += t * t;
            }
            if (d2 < best || (d2 == best && b < target)) {
                best = d2;
                target = b;
            }
        }
        if (target < 0) continue;  // the only region left
        parent[a] = target;
        size[target] += size[a];
        for (int c = 0; c < ch; ++c)
            sum[static_cast<std::size_t>(target) * ch + c] += sum[static_cast<std::size_t>(a) * ch + c];
        if (adj[target].size() < adj[a].size()) std::swap(adj[target], adj[a]);
        adj[target].insert(adj[target].end(), adj[a].begin(), adj[a].end());
        std::vector<int>().swap(adj[a]);
        std::sort(adj[target].begin(), adj[target].end());
        adj[target].erase(std::unique(adj[target].begin(), adj[target].end()), adj[target].end());
        if (size[target] < min_size) small.emplace(size[target], target);
    }
    SegmentationMap out(w, h);
    for (std::size_t i = 0; i < comp.size(); ++i) out.labels[i] = find(comp[i]) + 1;
    return out;
}

}  // namespace

FeatureImage to_lab(const Image& image) {
    FeatureImage out{image.width, image.height, image.channels == 1 ? 1 : 3, {}};
    out.data.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            double* dst = out.data.data() + (static_cast<std::size_t>(y) * out.width + x) * out.channels;
            if (image.channels == 1) {
                double lum = srgb_to_linear(image.at(x, y, 0));
                dst[0] = 116.0 * lab_f(lum) - 16.0;
                continue;
            }
            double r = srgb_to_linear(image.at(x, y, 0));
            double g = srgb_to_linear(image.at(x, y, 1));
            double b = srgb_to_linear(image.at(x, y, 2));
            double X = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
            double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
            double Z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
            double fx = lab_f(X), fy = lab_f(Y), fz = lab_f(Z);
            dst[0] = 116.0 * fy - 16.0;
            dst[1] = 500.0 * (fx - fy);
            dst[2] = 200.0 * (fy - fz);
        }
    }
    return out;
}

FeatureImage to_features(const Image& image, double scale) {
    FeatureImage out{image.width, image.height, image.channels, image.data};
    for (double& v : out.data) v *= scale;
    return out;
}

SegmentationMap slic_segment(const FeatureImage& img, const SlicParams& params) {
    const int w = img.width, h = img.height;
    const long long n_pixels = static_cast<long long>(w) * h;
    if (n_pixels == 0 || img.channels == 0) throw PreconditionError("slic_segment: empty image");
    if (params.k < 1 || params.k > n_pixels) throw PreconditionError("slic_segment: k must be in [1, pixel count]");
    if (!(params.compactness > 0.0)) throw PreconditionError("slic_segment: compactness must be > 0");
    if (params.iterations < 1) throw PreconditionError("slic_segment: iterations must be >= 1");

    const GridShape grid = choose_grid(w, h, params.k);
    const double step_x = static_cast<double>(w) / grid.nx;
    const double step_y = static_cast<double>(h) / grid.ny;
    const double spacing = std::sqrt(static_cast<double>(n_pixels) / (grid.nx * grid.ny));
    const double spatial_weight = (params.compactness / spacing) * (params.compactness / spacing);
    const int radius = static_cast<int>(std::ceil(std::max(step_x, step_y)));

    std::vector<Center> centers;
    centers.reserve(static_cast<std::size_t>(grid.nx) * grid.ny);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            int cx = std::min(w - 1, static_cast<int>((i + 0.5) * step_x));
            int cy = std::min(h - 1, static_cast<int>((j + 0.5) * step_y));
            int best_x = cx, best_y = cy;
            double best_g = gradient_at(img, cx, cy);
            for (int oy = -1; oy <= 1; ++oy) {
                for (int ox = -1; ox <= 1; ++ox) {
                    int px = cx + ox, py = cy + oy;
                    if (px < 0 || px >= w || py < 0 || py >= h) continue;
                    double g = gradient_at(img, px, py);
                    if (g < best_g) {
                        best_g = g;
                        best_x = px;
                        best_y = py;
                    }
                }
            }
            const double* f = img.at(best_x, best_y);
            centers.push_back({static_cast<double>(best_x), static_cast<double>(best_y),
                               std::vector<double>(f, f + img.channels)});
        }
    }
    const int k = static_cast<int>(centers.size());

    std::vector<int> label(static_cast<std::size_t>(n_pixels), -1);
    std::vector<double> best(static_cast<std::size_t>(n_pixels));
    for (int iter = 0; iter < params.iterations; ++iter) {
        std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
        std::fill(label.begin(), label.end(), -1);
        for (int c = 0; c < k; ++c) {
            const Center& ctr = centers[c];
            int x_lo = std::max(0, static_cast<int>(ctr.x) - radius), x_hi = std::min(w - 1, static_cast<int>(ctr.x) + radius);
            int y_lo = std::max(0, static_cast<int>(ctr.y) - radius), y_hi = std::min(h - 1, static_cast<int>(ctr.y) + radius);
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    double ds = (x - ctr.x) * (x - ctr.x) + (y - ctr.y) * (y - ctr.y);
                    double dist = feature_dist2(img.at(x, y), ctr.f) + ds * spatial_weight;
                    std::size_t idx = static_cast<std::size_t>(y) * w + x;
                    if (dist < best[idx]) {
                        best[idx] = dist;
                        label[idx] = c;
                    }
                }
            }
        }
        // pixels outside every window go to the globally nearest center
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                std::size_t idx = static_cast<std::size_t>(y) * w + x;
                if (label[idx] >= 0) continue;
                for (int c = 0; c < k; ++c) {
                    double ds = (x - centers[c].x) * (x - centers[c].x) + (y - centers[c].y) * (y - centers[c].y);
                    double dist = feature_dist2(img.at(x, y), centers[c].f) + ds * spatial_weight;
                    if (dist < best[idx]) {
                        best[idx] = dist;
                        label[idx] = c;
                    }
                }
            }
        }
        std::vector<Center> sums(k, Center{0.0, 0.0, std::vector<double>(img.channels, 0.0)});
        std::vector<long long> counts(k, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                int c = label[static_cast<std::size_t>(y) * w + x];
                sums[c].x += x;
                sums[c].y += y;
                const double* f = img.at(x, y);
                for (int ch = 0; ch < img.channels; ++ch) sums[c].f[ch] += f[ch];
                ++counts[c];
            }
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double inv = 1.0 / static_cast<double>(counts[c]);
            centers[c].x = sums[c].x * inv;
            centers[c].y = sums[c].y * inv;
            for (int ch = 0; ch < img.channels; ++ch) centers[c].f[ch] = sums[c].f[ch] * inv;
        }
    }

    SegmentationMap raw(w, h);
    for (std::size_t i = 0; i < raw.labels.size(); ++i) raw.labels[i] = label[i];
    int min_size = std::max<long long>(1, n_pixels / k / 4);
    return compact_labels(enforce_connectivity(raw, img, min_size));
}

SegmentationMap slic_segment(const Image& image, const SlicParams& params) {
    return slic_segment(to_lab(image), params);
}

SegmentationMap compact_labels(const SegmentationMap& map) {
    std::map<int, int> remap;
    SegmentationMap out(map.width, map.height);
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        auto [it, inserted] = remap.try_emplace(map.labels[i], static_cast<int>(remap.size()) + 1);
        out.labels[i] = it->second;
    }
    return out;
}

SegmentationMap limit_segments(const SegmentationMap& map, int max_segments) {
    if (max_segments < 1) throw PreconditionError("limit_segments: max_segments must be >= 1");
    SegmentationMap cur = compact_labels(map);
    const int w = cur.width, h = cur.height;
    while (true) {
        int n = 0;
        for (int l : cur.labels) n = std::max(n, l);
        if (n <= max_segments) break;
        std::vector<long long> size(n + 1, 0);
        for (int l : cur.labels) ++size[l];
        int smallest = 1;
        for (int l = 2; l <= n; ++l) {
            if (size[l] < size[smallest]) smallest = l;
        }
        std::vector<long long> border(n + 1, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                int a = cur.at(x, y);
                if (x + 1 < w) {
                    int b = cur.at(x + 1, y);
                    if (a != b && (a == smallest || b == smallest)) ++border[a == smallest ? b : a];
                }
                if (y + 1 < h) {
                    int b = cur.at(x, y + 1);
                    if (a != b && (a == smallest || b == smallest)) ++border[a == smallest ? b : a];
                }
            }
        }
        int target = 0;
        for (int l = 1; l <= n; ++l) {
            if (l != smallest && (target == 0 || border[l] > border[target])) target = l;
        }
        for (int& l : cur.labels) {
            if (l == smallest) l = target;
        }
        cur = compact_labels(cur);
    }
    return cur;
}

}  // namespace grapl
