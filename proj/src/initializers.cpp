#include "grapl/initializers.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace grapl {

void PatchLabeling::validate() const {
    if (k0 < 1) throw PreconditionError("PatchLabeling: k0 must be >= 1");
    for (int l : labels) {
        if (l < 1 || l > k0) throw PreconditionError("PatchLabeling: label out of range");
    }
}

void SoftPatchLabels::validate(double tol) const {
    for (int p = 0; p < dist.rows; ++p) {
        double s = 0.0;
        for (double v : dist.row(p)) {
            if (!(v >= 0.0)) throw PreconditionError("SoftPatchLabels: negative or NaN entry");
            s += v;
        }
        if (std::abs(s - 1.0) > tol) throw PreconditionError("SoftPatchLabels: row does not sum to 1");
    }
}

InitKind parse_init_kind(const std::string& name) {
    if (name == "slic") return InitKind::Slic;
    if (name == "patchwise") return InitKind::Patchwise;
    if (name == "seedwise") return InitKind::Seedwise;
    if (name == "spatial") return InitKind::Spatial;
    throw PreconditionError("unknown initializer '" + name + "'");
}

std::string to_string(InitKind kind) {
    switch (kind) {
        case InitKind::Slic: return "slic";
        case InitKind::Patchwise: return "patchwise";
        case InitKind::Seedwise: return "seedwise";
        case InitKind::Spatial: return "spatial";
    }
    return "slic";
}

SoftPatchLabels soft_labels_from_map(const SegmentationMap& pixels, const PatchGrid& grid, int k0) {
    SoftPatchLabels soft{Matrix(grid.count(), k0)};
    const double inv_area = 1.0 / (static_cast<double>(grid.patch_w) * grid.patch_h);
    for (int p = 0; p < grid.count(); ++p) {
        int ox = grid.origin_x(p), oy = grid.origin_y(p);
        for (int y = oy; y < oy + grid.patch_h; ++y) {
            for (int x = ox; x < ox + grid.patch_w; ++x) {
                int l = pixels.at(x, y);
                if (l < 1 || l > k0) throw PreconditionError("soft_labels_from_map: label out of range");
                soft.dist(p, l - 1) += 1.0;
            }
        }
        for (double& v : soft.dist.row(p)) v *= inv_area;
    }
    return soft;
}

SoftPatchLabels init_slic_soft(const Image& image, const PatchGrid& grid, int k0, const SlicParams& slic) {
    SlicParams params = slic;
    params.k = k0;
    SegmentationMap seg = limit_segments(slic_segment(image, params), k0);
    return soft_labels_from_map(seg, grid, k0);
}

PatchLabeling init_patchwise_random(const PatchGrid& grid, int k0, std::uint64_t seed) {
    if (k0 < 1) throw PreconditionError("init_patchwise_random: k0 must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(1, k0);
    PatchLabeling out{std::vector<int>(grid.count()), k0};
    for (int& l : out.labels) l = pick(rng);
    return out;
}

PatchLabeling init_seedwise_random(const PatchGrid& grid, int k0, std::uint64_t seed) {
    const int n = grid.count();
    if (k0 < 1 || k0 > n) throw PreconditionError("init_seedwise_random: k0 must be in [1, d^2]");
    std::mt19937_64 rng(seed);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    return nearest_seed_labeling(grid, std::vector<int>(order.begin(), order.begin() + k0));
}

PatchLabeling nearest_seed_labeling(const PatchGrid& grid, const std::vector<int>& seeds) {
    const int n = grid.count(), k0 = static_cast<int>(seeds.size());
    if (k0 < 1) throw PreconditionError("nearest_seed_labeling: need at least one seed");
    for (int s : seeds)
        if (s < 0 || s >= n) throw PreconditionError("nearest_seed_labeling: seed outside the grid");

    // scan seeds in ascending patch index so distance ties go to the lowest patch index
    std::vector<int> by_index(k0);
    std::iota(by_index.begin(), by_index.end(), 0);
    std::sort(by_index.begin(), by_index.end(), [&](int a, int b) { return seeds[a] < seeds[b]; });

    PatchLabeling out{std::vector<int>(n), k0};
    for (int p = 0; p < n; ++p) {
        double best = std::numeric_limits<double>::infinity();
        int label = 1;
        for (int i : by_index) {
            double dist = grid.center_distance(p, seeds[i]);
            if (dist < best) {
                best = dist;
                label = i + 1;
            }
        }
        out.labels[p] = label;
    }
    return out;
}

KMeansResult spatial_kmeans(const PatchGrid& grid, int k0, std::uint64_t seed, int restarts, int max_iterations) {
    const int n = grid.count();
    if (k0 < 1 || k0 > n) throw PreconditionError("spatial_kmeans: k0 must be in [1, d^2]");
    std::mt19937_64 rng(seed);
    KMeansResult best_result;
    best_result.inertia = std::numeric_limits<double>::infinity();
    auto sq = [&](int p, const PatchCenter& c) {
        double dx = grid.centers[p].x - c.x, dy = grid.centers[p].y - c.y;
        return dx * dx + dy * dy;
    };
    for (int run = 0; run < std::max(1, restarts); ++run) {
        // k-means++ seeding
        std::vector<PatchCenter> centers;
        std::uniform_int_distribution<int> first(0, n - 1);
        centers.push_back(grid.centers[first(rng)]);
        std::vector<double> d2(n);
        while (static_cast<int>(centers.size()) < k0) {
            double total = 0.0;
            for (int p = 0; p < n; ++p) {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& c : centers) m = std::min(m, sq(p, c));
                d2[p] = m;
                total += m;
            }
            int chosen = 0;
            if (total > 0.0) {
                std::uniform_real_distribution<double> u(0.0, total);
                double r = u(rng), acc = 0.0;
                chosen = n - 1;
                for (int p = 0; p < n; ++p) {
                    acc += d2[p];
                    if (acc > r && d2[p] > 0.0) {
                        chosen = p;
                        break;
                    }
                }
            }
            centers.push_back(grid.centers[chosen]);
        }

        std::vector<int> assign(n, -1);
        int iter = 0;
        for (; iter < max_iterations; ++iter) {
            bool changed = false;
            for (int p = 0; p < n; ++p) {
                int arg = 0;
                double m = sq(p, centers[0]);
                for (int c = 1; c < k0; ++c) {
                    double v = sq(p, centers[c]);
                    if (v < m) {
                        m = v;
                        arg = c;
                    }
                }
                if (assign[p] != arg) {
                    assign[p] = arg;
                    changed = true;
                }
            }
            if (!changed) break;
            std::vector<PatchCenter> sums(k0);
            std::vector<int> counts(k0, 0);
            for (int p = 0; p < n; ++p) {
                sums[assign[p]].x += grid.centers[p].x;
                sums[assign[p]].y += grid.centers[p].y;
                ++counts[assign[p]];
            }
            for (int c = 0; c < k0; ++c) {
                if (counts[c] > 0) centers[c] = {sums[c].x / counts[c], sums[c].y / counts[c]};
            }
        }
        double inertia = 0.0;
        for (int p = 0; p < n; ++p) inertia += sq(p, centers[assign[p]]);
        if (inertia < best_result.inertia) {
            best_result.inertia = inertia;
            best_result.iterations = iter;
            best_result.labeling = {std::vector<int>(n), k0};
            for (int p = 0; p < n; ++p) best_result.labeling.labels[p] = assign[p] + 1;
        }
    }
    return best_result;
}

PatchLabeling init_spatial_kmeans(const PatchGrid& grid, int k0, std::uint64_t seed) {
    return spatial_kmeans(grid, k0, seed).labeling;
}

SoftPatchLabels one_hot(const PatchLabeling& labeling) {
    labeling.validate();
    SoftPatchLabels soft{Matrix(static_cast<int>(labeling.labels.size()), labeling.k0)};
    for (std::size_t p = 0; p < labeling.labels.size(); ++p) soft.dist(static_cast<int>(p), labeling.labels[p] - 1) = 1.0;
    return soft;
}

PatchLabeling hard_labels(const SoftPatchLabels& soft) {
    PatchLabeling out{std::vector<int>(soft.dist.rows), soft.k0()};
    for (int p = 0; p < soft.dist.rows; ++p) {
        auto row = soft.dist.row(p);
        out.labels[p] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) + 1;
    }
    return out;
}

SoftPatchLabels initialize(InitKind kind, const Image& image, const PatchGrid& grid, int k0, std::uint64_t seed,
                           const SlicParams& slic) {
    switch (kind) {
        case InitKind::Slic: return init_slic_soft(image, grid, k0, slic);
        case InitKind::Patchwise: return one_hot(init_patchwise_random(grid, k0, seed));
        case InitKind::Seedwise: return one_hot(init_seedwise_random(grid, k0, seed));
        case InitKind::Spatial: return one_hot(init_spatial_kmeans(grid, k0, seed));
    }
    throw PreconditionError("unknown initializer");
}

}  // namespace grapl
