#pragma once

#include "grapl/image.hpp"
#include "grapl/matrix.hpp"
#include "grapl/patch_grid.hpp"
#include "grapl/slic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace grapl {

/// Hard per-patch labels in 1..k0, row-major patch order.
struct PatchLabeling {
    std::vector<int> labels;
    int k0 = 0;

    void validate() const;
};

/// Per-patch probability vectors (d^2 x k0); row p is the target distribution for patch p.
struct SoftPatchLabels {
    Matrix dist;

    int k0() const { return dist.cols; }
    void validate(double tol = 1e-6) const;
};

enum class InitKind { Slic, Patchwise, Seedwise, Spatial };

InitKind parse_init_kind(const std::string& name);
std::string to_string(InitKind kind);

/// Histogram of SLIC(k0, low compactness) labels inside each patch, normalized.
/// SLIC segments beyond k0 are merged into neighbors first so vectors have length k0.
SoftPatchLabels init_slic_soft(const Image& image, const PatchGrid& grid, int k0, const SlicParams& slic);

/// Per-patch histogram of an existing pixel label map (labels 1..k0).
SoftPatchLabels soft_labels_from_map(const SegmentationMap& pixels, const PatchGrid& grid, int k0);

PatchLabeling init_patchwise_random(const PatchGrid& grid, int k0, std::uint64_t seed);
PatchLabeling init_seedwise_random(const PatchGrid& grid, int k0, std::uint64_t seed);

/// seeds[i] gets label i+1; every patch takes the label of its nearest seed center
/// (ties to the lowest seed patch index).
PatchLabeling nearest_seed_labeling(const PatchGrid& grid, const std::vector<int>& seeds);

struct KMeansResult {
    PatchLabeling labeling;
    double inertia = 0.0;  // sum of squared distances to the assigned centroid
    int iterations = 0;
};

/// Lloyd's k-means on patch centers, k-means++ seeding, best of `restarts` runs.
KMeansResult spatial_kmeans(const PatchGrid& grid, int k0, std::uint64_t seed, int restarts = 10,
                            int max_iterations = 100);
PatchLabeling init_spatial_kmeans(const PatchGrid& grid, int k0, std::uint64_t seed);

SoftPatchLabels one_hot(const PatchLabeling& labeling);

/// argmax per row (lowest index on ties), labels 1-based.
PatchLabeling hard_labels(const SoftPatchLabels& soft);

/// Runs the selected initializer and returns soft targets.
SoftPatchLabels initialize(InitKind kind, const Image& image, const PatchGrid& grid, int k0, std::uint64_t seed,
                           const SlicParams& slic);

}  // namespace grapl
