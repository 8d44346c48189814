#include "doctest.h"
#include "support.hpp"

#include "grapl/errors.hpp"
#include "grapl/initializers.hpp"
#include "grapl/slic.hpp"

#include <map>
#include <queue>
#include <set>

using namespace grapl;

namespace {

// Number of 4-connected components of one label (BFS oracle).
int components_of(const SegmentationMap& m, int label) {
    std::vector<char> seen(m.labels.size(), 0);
    int comps = 0;
    for (int start = 0; start < static_cast<int>(m.labels.size()); ++start) {
        if (seen[start] || m.labels[start] != label) continue;
        ++comps;
        std::queue<int> q;
        q.push(start);
        seen[start] = 1;
        while (!q.empty()) {
            int i = q.front();
            q.pop();
            int x = i % m.width, y = i / m.width;
            const int nx[4] = {x - 1, x + 1, x, x}, ny[4] = {y, y, y - 1, y + 1};
            for (int k = 0; k < 4; ++k) {
                if (nx[k] < 0 || ny[k] < 0 || nx[k] >= m.width || ny[k] >= m.height) continue;
                int j = ny[k] * m.width + nx[k];
                if (!seen[j] && m.labels[j] == label) {
                    seen[j] = 1;
                    q.push(j);
                }
            }
        }
    }
    return comps;
}

PatchGrid grid_of(int d, int side = 5) { return extract_patch_grid(Image(d * side, d * side, 3), d); }

}  // namespace

TEST_CASE("slic: constant image, k=4 gives four near-equal segments") {
    const SegmentationMap m = slic_segment(Image(40, 40, 3, 0.3), SlicParams{4, 1.0, 10});
    std::map<int, int> sizes;
    std::map<int, std::array<int, 4>> box;  // min x, min y, max x, max y
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            const int l = m.at(x, y);
            auto [it, fresh] = box.try_emplace(l, std::array<int, 4>{x, y, x, y});
            auto& b = it->second;
            b = {std::min(b[0], x), std::min(b[1], y), std::max(b[2], x), std::max(b[3], y)};
            ++sizes[l];
        }
    CHECK(sizes.size() == 4);
    for (auto [l, s] : sizes) {
        const auto& b = box[l];
        CHECK(s == (b[2] - b[0] + 1) * (b[3] - b[1] + 1));  // rectangular
        CHECK(std::abs(s - 400) <= 60);
    }
}

TEST_CASE("slic: two vertical color halves, k=2 follows the color edge") {
    // Two flat colors: the brute-force color-space 2-means is exactly the color partition.
    const int w = 40, h = 30, edge = 17;
    SegmentationMap truth;
    const Image img = grapl::test::two_region_image(w, h, {0.9, 0.1, 0.1}, {0.1, 0.2, 0.9}, 0.0, 1,
                                                    [&](int x, int) { return x >= edge; }, &truth);
    const SegmentationMap m = slic_segment(img, SlicParams{2, 1.0, 10});
    REQUIRE(m.label_set().size() == 2);
    for (int y = 0; y < h; ++y) {
        int boundary = -1;
        for (int x = 1; x < w; ++x)
            if (m.at(x, y) != m.at(x - 1, y)) boundary = x;
        CHECK(std::abs(boundary - edge) <= 1);
    }
}

TEST_CASE("slic: low compactness on a noisy two-color image keeps segments on one side of the edge") {
    for (int trial = 0; trial < 4; ++trial) {
        SegmentationMap truth;
        const Image img = test::two_region_image(
            160, 240, {0.38, 0.35, 0.71}, {0.80, 0.27, 0.35}, 0.03, 40 + trial,
            [&](int x, int y) { return trial % 2 ? y >= 100 : x >= 70; }, &truth);
        SlicParams p;
        p.k = 4;
        p.compactness = 1.0;
        const SegmentationMap seg = slic_segment(img, p);
        std::map<int, std::array<int, 2>> counts;
        for (std::size_t i = 0; i < seg.labels.size(); ++i) ++counts[seg.labels[i]][truth.labels[i] - 1];
        CHECK(counts.size() >= 2u);
        for (const auto& [label, c] : counts) CHECK(std::min(c[0], c[1]) <= 0.01 * (c[0] + c[1]));
    }
}

TEST_CASE("slic: k=1 covers the image") {
    std::mt19937_64 rng(2);
    const SegmentationMap m = slic_segment(grapl::test::random_image(23, 17, 3, rng), SlicParams{1, 1.0, 10});
    CHECK(m.label_set() == std::set<int>{1});
}

TEST_CASE("slic: labels are 1..n and each is 4-connected (property)") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 8; ++trial) {
        const Image img = grapl::test::random_image(30 + trial, 25, trial % 2 ? 3 : 1, rng);
        const SegmentationMap m = slic_segment(img, SlicParams{3 + trial, trial % 2 ? 1.0 : 10.0, 10});
        const std::set<int> labels = m.label_set();
        CHECK(*labels.begin() == 1);
        CHECK(*labels.rbegin() == static_cast<int>(labels.size()));
        for (int l : labels) CHECK(components_of(m, l) == 1);
    }
}

TEST_CASE("slic is deterministic") {
    std::mt19937_64 rng(9);
    const Image img = grapl::test::random_image(32, 32, 3, rng);
    CHECK(slic_segment(img, SlicParams{6, 1.0, 10}).labels == slic_segment(img, SlicParams{6, 1.0, 10}).labels);
}

TEST_CASE("limit_segments caps and compacts labels") {
    std::mt19937_64 rng(4);
    const SegmentationMap m = slic_segment(grapl::test::random_image(40, 40, 3, rng), SlicParams{12, 1.0, 10});
    const SegmentationMap lim = limit_segments(m, 4);
    const std::set<int> labels = lim.label_set();
    CHECK(labels.size() <= 4);
    CHECK(*labels.rbegin() == static_cast<int>(labels.size()));
    SegmentationMap c(3, 1);
    c.labels = {9, 4, 9};
    CHECK(compact_labels(c).labels == std::vector<int>{1, 2, 1});
}

TEST_CASE("soft_labels_from_map: counting oracle, one-hot and half/half") {
    const PatchGrid g = grid_of(3, 6);
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> lab(1, 4);
    SegmentationMap m(18, 18);
    for (int& l : m.labels) l = lab(rng);
    // left half of patch 0 label 1, right half label 2; patch 4 entirely label 3
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) m.at(x, y) = x < 3 ? 1 : 2;
    for (int y = 6; y < 12; ++y)
        for (int x = 6; x < 12; ++x) m.at(x, y) = 3;
    const SoftPatchLabels soft = soft_labels_from_map(m, g, 4);
    CHECK_NOTHROW(soft.validate());
    CHECK(soft.dist(0, 0) == 0.5);
    CHECK(soft.dist(0, 1) == 0.5);
    CHECK(soft.dist(4, 2) == 1.0);
    for (int p = 0; p < g.count(); ++p) {
        for (int k = 1; k <= 4; ++k) {
            int count = 0;
            for (int y = g.origin_y(p); y < g.origin_y(p) + 6; ++y)
                for (int x = g.origin_x(p); x < g.origin_x(p) + 6; ++x) count += m.at(x, y) == k;
            CHECK(soft.dist(p, k - 1) == doctest::Approx(count / 36.0));
        }
    }
}

TEST_CASE("init_slic_soft: rows are distributions of length k0") {
    std::mt19937_64 rng(8);
    const Image img = grapl::test::random_image(50, 50, 3, rng);
    const PatchGrid g = extract_patch_grid(img, 10);
    const SoftPatchLabels soft = init_slic_soft(img, g, 5, SlicParams{5, 1.0, 10});
    CHECK(soft.k0() == 5);
    CHECK_NOTHROW(soft.validate());
}

TEST_CASE("init_patchwise_random") {
    const PatchGrid g = grid_of(32);
    const PatchLabeling one = init_patchwise_random(g, 1, 3);
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 1; }));
    CHECK(init_patchwise_random(g, 14, 5).labels == init_patchwise_random(g, 14, 5).labels);
    const PatchLabeling r = init_patchwise_random(g, 14, 5);
    std::vector<int> freq(15, 0);
    for (int l : r.labels) ++freq[l];
    const double mean = 1024.0 / 14, sd = std::sqrt(1024.0 * (1.0 / 14) * (13.0 / 14));
    for (int k = 1; k <= 14; ++k) CHECK(std::abs(freq[k] - mean) <= 3 * sd);
}

TEST_CASE("init_seedwise_random") {
    const PatchGrid g = grid_of(4);
    const PatchLabeling perm = init_seedwise_random(g, 16, 2);
    CHECK(std::set<int>(perm.labels.begin(), perm.labels.end()).size() == 16);
    const PatchLabeling one = init_seedwise_random(g, 1, 2);
    CHECK(std::set<int>(one.labels.begin(), one.labels.end()) == std::set<int>{1});
    CHECK_THROWS_AS(init_seedwise_random(g, 17, 2), PreconditionError);
    const PatchLabeling r = init_seedwise_random(g, 5, 9);
    CHECK(std::set<int>(r.labels.begin(), r.labels.end()).size() == 5);
}

TEST_CASE("nearest_seed_labeling: opposite corners match brute force") {
    const PatchGrid g = grid_of(4);
    const std::vector<int> seeds = {0, 15};
    const PatchLabeling l = nearest_seed_labeling(g, seeds);
    for (int p = 0; p < 16; ++p) {
        const double r = p / 4, c = p % 4;
        const double d0 = std::hypot(r - 0, c - 0), d1 = std::hypot(r - 3, c - 3);
        // ties go to the lower patch index, i.e. seed 0
        CHECK(l.labels[p] == (d1 < d0 ? 2 : 1));
    }
}

TEST_CASE("spatial k-means") {
    const PatchLabeling constant = init_spatial_kmeans(grid_of(3), 1, 0);
    CHECK(std::set<int>(constant.labels.begin(), constant.labels.end()) == std::set<int>{1});
    const PatchLabeling own = init_spatial_kmeans(grid_of(2), 4, 0);
    CHECK(std::set<int>(own.labels.begin(), own.labels.end()).size() == 4);

    // 8x8 grid, k0=4: the optimum is the quadrant partition; its inertia is computed directly.
    const PatchGrid g = grid_of(8);
    const KMeansResult km = spatial_kmeans(g, 4, 1);
    double quad = 0.0;
    for (int qr = 0; qr < 2; ++qr)
        for (int qc = 0; qc < 2; ++qc) {
            const double cx = (qc * 4 + 2) * 5.0, cy = (qr * 4 + 2) * 5.0;
            for (int r = qr * 4; r < qr * 4 + 4; ++r)
                for (int c = qc * 4; c < qc * 4 + 4; ++c)
                    quad += std::pow((c + 0.5) * 5 - cx, 2) + std::pow((r + 0.5) * 5 - cy, 2);
        }
    CHECK(km.inertia == doctest::Approx(quad));
    for (int p = 0; p < 64; ++p) {
        const int quadrant_rep = (p / 8 / 4) * 32 + (p % 8 / 4) * 4;
        CHECK(km.labeling.labels[p] == km.labeling.labels[quadrant_rep]);
    }
}

TEST_CASE("one_hot / hard_labels round trip, lowest index on ties") {
    PatchLabeling l{{3, 1, 2, 2}, 3};
    CHECK(hard_labels(one_hot(l)).labels == l.labels);
    SoftPatchLabels tie{Matrix(1, 3, 1.0 / 3)};
    CHECK(hard_labels(tie).labels == std::vector<int>{1});
    PatchLabeling bad{{4}, 3};
    CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("initialize dispatches and is deterministic") {
    std::mt19937_64 rng(12);
    const Image img = grapl::test::random_image(40, 40, 3, rng);
    const PatchGrid g = extract_patch_grid(img, 8);
    for (InitKind kind : {InitKind::Slic, InitKind::Patchwise, InitKind::Seedwise, InitKind::Spatial}) {
        const SoftPatchLabels a = initialize(kind, img, g, 4, 77, SlicParams{});
        const SoftPatchLabels b = initialize(kind, img, g, 4, 77, SlicParams{});
        CHECK(a.dist.data == b.dist.data);
        CHECK(parse_init_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_init_kind("bogus"), PreconditionError);
}
