#pragma once

#include "grapl/config.hpp"
#include "grapl/initializers.hpp"
#include "grapl/mrf.hpp"
#include "grapl/network.hpp"
#include "grapl/patch_grid.hpp"

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace grapl {

struct StepRecord {
    int iteration = 0;  // 1-based
    int step = 0;       // 1-based within the iteration
    LossBreakdown loss;
    double mean_cross_entropy = 0.0;  // cross_entropy / d^2
};

struct IterationRecord {
    int iteration = 0;
    int steps_run = 0;
    bool early_stopped = false;
    bool reinitialized = false;  // cold start only
    EnergyBreakdown energy_before;  // previous labeling under this iteration's unaries
    EnergyBreakdown energy_after;
    int k_before = 0;
    int k_after = 0;
    int moves = 0;
    int accepted_moves = 0;
    int cycles = 0;
};

struct TrainHistory {
    std::vector<StepRecord> steps;
    std::vector<IterationRecord> iterations;
    bool early_stopped = false;
    double sigma = 0.0;
    bool degenerate_sigma = false;
    int reinit_count = 0;
    int k_hat = 0;
};

struct GraplRun {
    PatchGrid grid;
    NetworkParams params;
    TrainHistory history;
    PatchLabeling labeling;  // final patch pseudo-labels S'
};

/// Number of distinct labels present.
int distinct_labels(const PatchLabeling& labeling);

/// Independent seed for a named random stream of one run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Affinity descriptor for a config; loads the GPLE file for the embedding metric.
AffinityMetric make_affinity_metric(const GraplConfig& config);

/// Pairwise graph for an image; falls back to phi = 1/dist with a warning when sigma is 0.
/// The uniform metric always uses the 4-neighbor lattice.
PairwiseGraph make_pairwise_graph(const Image& image, const PatchGrid& grid, const GraplConfig& config,
                                  const AffinityMetric& metric, bool& degenerate_sigma);

/// Alternates full-batch Adam training against the current pseudo-labels with alpha-expansion
/// relabeling from eval-mode unaries. Parameters persist across iterations unless cold_start.
GraplRun run_grapl(const Image& image, const GraplConfig& config, const AffinityMetric& metric);
GraplRun run_grapl(const Image& image, const GraplConfig& config);

nlohmann::json to_json(const TrainHistory& history);

}  // namespace grapl
