#include "grapl/mrf.hpp"

#include "grapl/errors.hpp"
#include "grapl/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace grapl {

AffinityKind parse_affinity_kind(const std::string& name) {
    if (name == "uniform" || name == "uniform_lattice") return AffinityKind::UniformLattice;
    if (name == "position") return AffinityKind::Position;
    if (name == "color" || name == "mean_color") return AffinityKind::MeanColor;
    if (name == "embedding") return AffinityKind::Embedding;
    throw PreconditionError("unknown affinity metric '" + name + "'");
}

std::string to_string(AffinityKind kind) {
    switch (kind) {
        case AffinityKind::UniformLattice: return "uniform";
        case AffinityKind::Position: return "position";
        case AffinityKind::MeanColor: return "color";
        case AffinityKind::Embedding: return "embedding";
    }
    return "color";
}

GraphTopology parse_topology(const std::string& name) {
    if (name == "full") return GraphTopology::Full;
    if (name == "lattice") return GraphTopology::Lattice;
    throw PreconditionError("unknown graph topology '" + name + "'");
}

std::string to_string(GraphTopology topology) { return topology == GraphTopology::Full ? "full" : "lattice"; }

Matrix patch_descriptors(const Image& image, const PatchGrid& grid, const AffinityMetric& metric) {
    const int n = grid.count();
    switch (metric.kind) {
        case AffinityKind::UniformLattice: return Matrix(n, 0);
        case AffinityKind::Position: {
            Matrix m(n, 2);
            for (int p = 0; p < n; ++p) {
                m(p, 0) = grid.centers[p].x;
                m(p, 1) = grid.centers[p].y;
            }
            return m;
        }
        case AffinityKind::MeanColor: {
            Matrix m(n, image.channels);
            const double scale = metric.color_scale / (static_cast<double>(grid.patch_w) * grid.patch_h);
            for (int p = 0; p < n; ++p) {
                for (int y = grid.origin_y(p); y < grid.origin_y(p) + grid.patch_h; ++y) {
                    for (int x = grid.origin_x(p); x < grid.origin_x(p) + grid.patch_w; ++x) {
                        for (int ch = 0; ch < image.channels; ++ch) m(p, ch) += image.at(x, y, ch);
                    }
                }
                for (double& v : m.row(p)) v *= scale;
            }
            return m;
        }
        case AffinityKind::Embedding: {
            if (metric.embedding.rows != n) {
                throw PreconditionError("embedding has " + std::to_string(metric.embedding.rows) +
                                        " vectors but the grid has " + std::to_string(n) + " patches");
            }
            if (metric.embedding.cols < 1) throw PreconditionError("embedding dimension must be >= 1");
            return metric.embedding;
        }
    }
    throw PreconditionError("unknown affinity metric");
}

Matrix compute_affinities(const Image& image, const PatchGrid& grid, const AffinityMetric& metric) {
    Matrix desc = patch_descriptors(image, grid, metric);
    Matrix aff(grid.count(), grid.count());
    if (desc.cols == 0) return aff;
    kernels::omp::pairwise_distances(desc.data, desc.rows, desc.cols, aff.data);
    return aff;
}

double compute_sigma(const Matrix& affinities) {
    const int n = affinities.rows;
    if (n < 2) throw PreconditionError("compute_sigma: need at least 2 patches");
    const double pairs = 0.5 * n * (n - 1.0);
    double sum = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) sum += affinities(p, q);
    const double mean = sum / pairs;
    double sq = 0.0;
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            double t = affinities(p, q) - mean;
            sq += t * t;
        }
    return std::sqrt(sq / pairs);
}

double patch_similarity(double aff, double sigma, double dist) {
    if (aff == 0.0) return 1.0 / dist;
    return std::exp(-(aff * aff) / (2.0 * sigma)) / dist;
}

PairwiseGraph build_pairwise_graph(const PatchGrid& grid, const Matrix* affinities, double sigma, double lambda,
                                   GraphTopology topology) {
    const int n = grid.count();
    if (affinities != nullptr) {
        if (affinities->rows != n || affinities->cols != n) {
            throw PreconditionError("build_pairwise_graph: affinity matrix does not match the grid");
        }
        if (!(sigma > 0.0)) throw PreconditionError("build_pairwise_graph: sigma must be > 0");
    }
    if (!(lambda >= 0.0)) throw PreconditionError("build_pairwise_graph: lambda must be >= 0");

    PairwiseGraph g;
    g.patches = n;
    g.sigma = sigma;
    g.lambda = lambda;
    g.topology = topology;
    auto add = [&](int p, int q) {
        double aff = affinities ? (*affinities)(p, q) : 0.0;
        g.edges.push_back({p, q, lambda * patch_similarity(aff, sigma, grid.center_distance(p, q))});
    };
    if (topology == GraphTopology::Full) {
        g.edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) add(p, q);
    } else {
        g.edges.reserve(static_cast<std::size_t>(2) * grid.d * (grid.d - 1));
        for (int p = 0; p < n; ++p) {
            if (grid.col_of(p) + 1 < grid.d) add(p, p + 1);
            if (grid.row_of(p) + 1 < grid.d) add(p, p + grid.d);
        }
    }
    return g;
}

UnaryCosts unary_costs(const Matrix& probs) {
    UnaryCosts u{Matrix(probs.rows, probs.cols)};
    for (std::size_t i = 0; i < probs.data.size(); ++i) u.costs.data[i] = -std::log(std::max(probs.data[i], kProbFloor));
    return u;
}

EnergyBreakdown energy(const PatchLabeling& labeling, const UnaryCosts& unary, const PairwiseGraph& graph) {
    if (static_cast<int>(labeling.labels.size()) != unary.patches() || graph.patches != unary.patches()) {
        throw PreconditionError("energy: inconsistent dimensions");
    }
    EnergyBreakdown e;
    for (int p = 0; p < unary.patches(); ++p) e.unary += unary.costs(p, labeling.labels[p] - 1);
    for (const auto& edge : graph.edges) {
        if (labeling.labels[edge.p] != labeling.labels[edge.q]) e.pairwise += edge.weight;
    }
    e.total = e.unary + e.pairwise;
    return e;
}

double build_expansion_network(const UnaryCosts& unary, const PairwiseGraph& graph, const PatchLabeling& current,
                               int alpha, FlowNetwork& net) {
    const int n = unary.patches();
    // x_p = 0 keeps the current label (source side), x_p = 1 switches to alpha (sink side)
    std::vector<double> keep(n, 0.0), take(n, 0.0);
    double offset = 0.0;
    for (int p = 0; p < n; ++p) {
        const int l = current.labels[p];
        if (l == alpha) {
            offset += unary.costs(p, alpha - 1);
        } else {
            keep[p] += unary.costs(p, l - 1);
            take[p] += unary.costs(p, alpha - 1);
        }
    }
    net.nodes = n + 2;
    net.source = n;
    net.sink = n + 1;
    net.arcs.clear();
    for (const auto& e : graph.edges) {
        if (e.weight <= 0.0) continue;
        const int a = current.labels[e.p], b = current.labels[e.q];
        const bool pa = a == alpha, qa = b == alpha;
        if (pa && qa) continue;
        if (pa) {
            keep[e.q] += e.weight;
        } else if (qa) {
            keep[e.p] += e.weight;
        } else {
            // E00 = w[a != b], E01 = E10 = w, E11 = 0
            const double e00 = a != b ? e.weight : 0.0;
            offset += e00;
            take[e.p] += e.weight - e00;
            take[e.q] -= e.weight;
            net.add_arc(e.p, e.q, 2.0 * e.weight - e00);
        }
    }
    for (int p = 0; p < n; ++p) {
        if (current.labels[p] == alpha) continue;
        const double diff = take[p] - keep[p];
        if (diff > 0.0) {
            offset += keep[p];
            net.add_arc(net.source, p, diff);
        } else {
            offset += take[p];
            if (diff < 0.0) net.add_arc(p, net.sink, -diff);
        }
    }
    return offset;
}

ExpansionResult alpha_expansion(const UnaryCosts& unary, const PairwiseGraph& graph, const PatchLabeling& init,
                                int k0, const ExpansionOptions& options) {
    if (k0 < 1 || unary.labels() != k0) throw PreconditionError("alpha_expansion: label count mismatch");
    init.validate();
    ExpansionResult result;
    result.labeling = init;
    result.labeling.k0 = k0;
    result.initial = energy(result.labeling, unary, graph);
    EnergyBreakdown current = result.initial;

    FlowNetwork net;
    PatchLabeling candidate;
    for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
        bool improved = false;
        for (int alpha = 1; alpha <= k0; ++alpha) {
            build_expansion_network(unary, graph, result.labeling, alpha, net);
            FlowResult cut = maxflow_mincut(net, options.solver);
            candidate = result.labeling;
            for (int p = 0; p < unary.patches(); ++p) {
                if (!cut.source_side[p]) candidate.labels[p] = alpha;
            }
            EnergyBreakdown next = energy(candidate, unary, graph);
            ExpansionMove move{cycle, alpha, current.total, next.total, next.total < current.total - options.min_decrease};
            result.moves.push_back(move);
            if (move.accepted) {
                std::swap(result.labeling, candidate);
                current = next;
                improved = true;
            }
        }
        result.cycles = cycle + 1;
        if (!improved) break;
    }
    result.final = current;
    return result;
}

}  // namespace grapl
