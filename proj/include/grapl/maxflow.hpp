#pragma once

#include <vector>

namespace grapl {

struct FlowArc {
    int from = 0;
    int to = 0;
    double capacity = 0.0;
};

/// Directed s-t network with nonnegative finite capacities. Parallel arcs are allowed.
struct FlowNetwork {
    int nodes = 0;
    int source = 0;
    int sink = 1;
    std::vector<FlowArc> arcs;

    void add_arc(int from, int to, double capacity) { arcs.push_back({from, to, capacity}); }
    void validate() const;
};

/// Every solver reports the same canonical minimum cut: the sink side is exactly the set of
/// nodes that can still reach the sink in the final residual graph (the smallest sink side).
struct FlowResult {
    double value = 0.0;
    std::vector<bool> source_side;

    double cut_capacity(const FlowNetwork& net) const;
};

enum class MaxflowSolver { PushRelabel, BoykovKolmogorov, EdmondsKarp };

/// Highest-label push-relabel with gap and global relabeling heuristics. Suited to the dense
/// expansion graphs of a fully connected patch MRF.
FlowResult maxflow_push_relabel(const FlowNetwork& net);

/// Boykov-Kolmogorov augmenting-path search with search-tree reuse.
FlowResult maxflow_bk(const FlowNetwork& net);

/// Shortest augmenting paths found by BFS. Slow on large graphs; used as a reference.
FlowResult maxflow_edmonds_karp(const FlowNetwork& net);

FlowResult maxflow_mincut(const FlowNetwork& net, MaxflowSolver solver = MaxflowSolver::PushRelabel);

}  // namespace grapl
