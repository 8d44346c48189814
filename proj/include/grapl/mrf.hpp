#pragma once

#include "grapl/image.hpp"
#include "grapl/initializers.hpp"
#include "grapl/matrix.hpp"
#include "grapl/maxflow.hpp"
#include "grapl/patch_grid.hpp"

#include <string>
#include <vector>

namespace grapl {

enum class AffinityKind { UniformLattice, Position, MeanColor, Embedding };

AffinityKind parse_affinity_kind(const std::string& name);
std::string to_string(AffinityKind kind);

/// Patch descriptor m(p) whose Euclidean distances define aff(p, q).
struct AffinityMetric {
    AffinityKind kind = AffinityKind::MeanColor;
    Matrix embedding;            // d^2 x dim, Embedding only
    double color_scale = 255.0;  // MeanColor only: intensity units of m(p)
};

enum class GraphTopology { Full, Lattice };

GraphTopology parse_topology(const std::string& name);
std::string to_string(GraphTopology topology);

struct PairwiseEdge {
    int p = 0;
    int q = 0;
    double weight = 0.0;  // lambda * phi(p, q)
};

struct PairwiseGraph {
    int patches = 0;
    std::vector<PairwiseEdge> edges;  // unordered pairs, p < q
    double sigma = 0.0;
    double lambda = 0.0;
    GraphTopology topology = GraphTopology::Full;
};

/// d^2 x k0 matrix; cost(p, k) = -ln max(prob(p, k), kProbFloor).
struct UnaryCosts {
    Matrix costs;

    int patches() const { return costs.rows; }
    int labels() const { return costs.cols; }
};

inline constexpr double kProbFloor = 1e-12;

/// m(p) for every patch: mean color (times color_scale), center position, or the ingested vector.
/// UniformLattice yields a d^2 x 0 matrix.
Matrix patch_descriptors(const Image& image, const PatchGrid& grid, const AffinityMetric& metric);

/// Symmetric d^2 x d^2 matrix of aff(p, q) = ||m(p) - m(q)||_2 with zero diagonal.
Matrix compute_affinities(const Image& image, const PatchGrid& grid, const AffinityMetric& metric);

/// Population standard deviation of aff over unordered pairs p != q. Returns 0 for a
/// degenerate (constant) affinity set; callers decide how to handle that.
double compute_sigma(const Matrix& affinities);

/// phi(p, q) = exp(-aff^2 / (2 sigma)) / dist(p, q); aff == nullptr means aff = 0 everywhere
/// (the exponential collapses to 1 and sigma is not used). Lattice keeps 4-neighbors only.
double patch_similarity(double aff, double sigma, double dist);

PairwiseGraph build_pairwise_graph(const PatchGrid& grid, const Matrix* affinities, double sigma, double lambda,
                                   GraphTopology topology);

UnaryCosts unary_costs(const Matrix& probs);

struct EnergyBreakdown {
    double total = 0.0;
    double unary = 0.0;
    double pairwise = 0.0;
};

EnergyBreakdown energy(const PatchLabeling& labeling, const UnaryCosts& unary, const PairwiseGraph& graph);

struct ExpansionOptions {
    int max_cycles = 5;
    double min_decrease = 1e-9;  // a move is accepted only if it lowers energy by more than this
    MaxflowSolver solver = MaxflowSolver::PushRelabel;
};

struct ExpansionMove {
    int cycle = 0;
    int alpha = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;  // energy of the candidate labeling
    bool accepted = false;
};

struct ExpansionResult {
    PatchLabeling labeling;
    EnergyBreakdown initial;
    EnergyBreakdown final;
    std::vector<ExpansionMove> moves;
    int cycles = 0;
};

/// Builds the flow network of the binary move "each patch keeps its label or switches to alpha".
/// Nodes 0..n-1 are patches, n is the source (keep), n+1 the sink (switch). Returns the constant
/// energy offset so that move energy = offset + cut capacity.
double build_expansion_network(const UnaryCosts& unary, const PairwiseGraph& graph, const PatchLabeling& current,
                               int alpha, FlowNetwork& net);

/// Cycles alpha = 1..k0 solving each expansion move exactly by min cut, starting from init.
ExpansionResult alpha_expansion(const UnaryCosts& unary, const PairwiseGraph& graph, const PatchLabeling& init,
                                int k0, const ExpansionOptions& options = {});

}  // namespace grapl
