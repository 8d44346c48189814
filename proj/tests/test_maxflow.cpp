#include "doctest.h"
#include "support.hpp"

#include "grapl/errors.hpp"
#include "grapl/maxflow.hpp"

#include <queue>

using namespace grapl;

namespace {

constexpr MaxflowSolver kSolvers[] = {MaxflowSolver::PushRelabel, MaxflowSolver::BoykovKolmogorov,
                                      MaxflowSolver::EdmondsKarp};

// Smallest sink side: nodes that reach the sink through arcs with leftover capacity, given a flow
// value known to be maximum. Computed from scratch with an independent augmenting-path flow.
std::vector<bool> oracle_source_side(const FlowNetwork& net) {
    const int n = net.nodes;
    std::vector<std::vector<double>> cap(n, std::vector<double>(n, 0.0));
    for (const auto& a : net.arcs) cap[a.from][a.to] += a.capacity;
    while (true) {
        std::vector<int> parent(n, -1);
        parent[net.source] = net.source;
        std::queue<int> q;
        q.push(net.source);
        while (!q.empty() && parent[net.sink] < 0) {
            int u = q.front();
            q.pop();
            for (int v = 0; v < n; ++v)
                if (parent[v] < 0 && cap[u][v] > 1e-12) {
                    parent[v] = u;
                    q.push(v);
                }
        }
        if (parent[net.sink] < 0) break;
        double f = std::numeric_limits<double>::infinity();
        for (int v = net.sink; v != net.source; v = parent[v]) f = std::min(f, cap[parent[v]][v]);
        for (int v = net.sink; v != net.source; v = parent[v]) {
            cap[parent[v]][v] -= f;
            cap[v][parent[v]] += f;
        }
    }
    std::vector<bool> reach_t(n, false);
    std::queue<int> q;
    q.push(net.sink);
    reach_t[net.sink] = true;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (int u = 0; u < n; ++u)
            if (!reach_t[u] && cap[u][v] > 1e-12) {
                reach_t[u] = true;
                q.push(u);
            }
    }
    std::vector<bool> side(n);
    for (int v = 0; v < n; ++v) side[v] = !reach_t[v];
    return side;
}

}  // namespace

TEST_CASE("maxflow: trivial networks") {
    for (MaxflowSolver s : kSolvers) {
        FlowNetwork one;
        one.nodes = 2;
        one.add_arc(0, 1, 5.0);
        CHECK(maxflow_mincut(one, s).value == 5.0);
        FlowNetwork none;
        none.nodes = 4;
        none.add_arc(0, 2, 3.0);
        none.add_arc(3, 1, 3.0);
        const FlowResult r = maxflow_mincut(none, s);
        CHECK(r.value == 0.0);
        CHECK(r.source_side[0]);
        CHECK(!r.source_side[1]);
    }
}

TEST_CASE("maxflow: invalid networks are rejected") {
    FlowNetwork net;
    net.nodes = 3;
    net.source = 0;
    net.sink = 0;
    CHECK_THROWS_AS(net.validate(), PreconditionError);
    net.sink = 2;
    net.add_arc(0, 1, -1.0);
    CHECK_THROWS_AS(maxflow_mincut(net), PreconditionError);
    net.arcs = {{0, 5, 1.0}};
    CHECK_THROWS_AS(maxflow_mincut(net), PreconditionError);
    net.arcs = {{0, 1, std::numeric_limits<double>::infinity()}};
    CHECK_THROWS_AS(maxflow_mincut(net), PreconditionError);
}

TEST_CASE("maxflow: every solver equals exhaustive min cut and the canonical cut (property)") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nodes(2, 10);
    std::uniform_real_distribution<double> dens(0.1, 0.8);
    for (int trial = 0; trial < 300; ++trial) {
        const FlowNetwork net = grapl::test::random_network(nodes(rng), dens(rng), 20, rng);
        const double oracle = grapl::test::brute_force_min_cut(net);
        const std::vector<bool> canonical = oracle_source_side(net);
        for (MaxflowSolver s : kSolvers) {
            CAPTURE(trial);
            CAPTURE(static_cast<int>(s));
            const FlowResult r = maxflow_mincut(net, s);
            CHECK(r.value == oracle);
            CHECK(r.cut_capacity(net) == oracle);
            CHECK(r.source_side == canonical);
        }
    }
}

TEST_CASE("maxflow: real capacities and parallel arcs agree across solvers") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> cap(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        FlowNetwork net;
        net.nodes = 60;
        net.source = 58;
        net.sink = 59;
        std::uniform_int_distribution<int> node(0, 59);
        for (int a = 0; a < 600; ++a) net.add_arc(node(rng), node(rng), cap(rng));
        const FlowResult pr = maxflow_mincut(net, MaxflowSolver::PushRelabel);
        const FlowResult bk = maxflow_mincut(net, MaxflowSolver::BoykovKolmogorov);
        const FlowResult ek = maxflow_mincut(net, MaxflowSolver::EdmondsKarp);
        CHECK(pr.value == doctest::Approx(ek.value).epsilon(1e-9));
        CHECK(bk.value == doctest::Approx(ek.value).epsilon(1e-9));
        CHECK(pr.cut_capacity(net) == doctest::Approx(ek.value).epsilon(1e-9));
        CHECK(bk.cut_capacity(net) == doctest::Approx(ek.value).epsilon(1e-9));
    }
}

TEST_CASE("maxflow: dense graph with terminal arcs on every node") {
    // Shape of an expansion network: complete graph plus source and sink links.
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> cap(0.0, 1.0);
    const int n = 120;
    FlowNetwork net;
    net.nodes = n + 2;
    net.source = n;
    net.sink = n + 1;
    for (int p = 0; p < n; ++p) {
        net.add_arc(net.source, p, 5.0 * cap(rng));
        net.add_arc(p, net.sink, 5.0 * cap(rng));
        for (int q = p + 1; q < n; ++q) net.add_arc(p, q, 0.05 * cap(rng));
    }
    const FlowResult ek = maxflow_mincut(net, MaxflowSolver::EdmondsKarp);
    for (MaxflowSolver s : {MaxflowSolver::PushRelabel, MaxflowSolver::BoykovKolmogorov}) {
        const FlowResult r = maxflow_mincut(net, s);
        CHECK(r.value == doctest::Approx(ek.value).epsilon(1e-9));
        CHECK(r.source_side == ek.source_side);
    }
}
