#include "grapl/maxflow.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace grapl {

void FlowNetwork::validate() const {
    if (nodes < 2) throw PreconditionError("FlowNetwork: need at least source and sink");
    if (source < 0 || source >= nodes || sink < 0 || sink >= nodes) throw PreconditionError("FlowNetwork: bad terminal");
    if (source == sink) throw PreconditionError("FlowNetwork: source equals sink");
    for (const auto& a : arcs) {
        if (a.from < 0 || a.from >= nodes || a.to < 0 || a.to >= nodes) throw PreconditionError("FlowNetwork: bad arc");
        if (!(a.capacity >= 0.0) || !std::isfinite(a.capacity)) {
            throw PreconditionError("FlowNetwork: capacities must be finite and nonnegative");
        }
    }
}

double FlowResult::cut_capacity(const FlowNetwork& net) const {
    double cut = 0.0;
    for (const auto& a : net.arcs) {
        if (source_side[a.from] && !source_side[a.to]) cut += a.capacity;
    }
    return cut;
}

namespace {

// Residual graph in CSR form; arc i and sister[i] are the two directions of one edge.
struct Residual {
    std::vector<int> first;  // size n+1
    std::vector<int> head;
    std::vector<int> sister;
    std::vector<double> cap;

    template <typename EdgeFn>
    void build(int n, std::size_t edge_count, EdgeFn edge) {
        first.assign(n + 1, 0);
        for (std::size_t e = 0; e < edge_count; ++e) {
            auto [u, v, c, rc] = edge(e);
            ++first[u + 1];
            ++first[v + 1];
        }
        for (int i = 0; i < n; ++i) first[i + 1] += first[i];
        std::vector<int> fill(first.begin(), first.end() - 1);
        head.resize(first[n]);
        sister.resize(first[n]);
        cap.resize(first[n]);
        for (std::size_t e = 0; e < edge_count; ++e) {
            auto [u, v, c, rc] = edge(e);
            int a = fill[u]++, b = fill[v]++;
            head[a] = v;
            head[b] = u;
            cap[a] = c;
            cap[b] = rc;
            sister[a] = b;
            sister[b] = a;
        }
    }
};

struct EdgeTuple {
    int u;
    int v;
    double cap;
    double rev_cap;
};

// Nodes that can reach the sink in the residual graph: seeds have a residual arc to the sink.
std::vector<char> reaches_sink(const Residual& g, int n, const std::vector<char>& seeds) {
    std::vector<char> mark(seeds);
    std::vector<int> stack;
    for (int i = 0; i < n; ++i) {
        if (mark[i]) stack.push_back(i);
    }
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int a = g.first[v]; a < g.first[v + 1]; ++a) {
            const int u = g.head[a];
            if (!mark[u] && g.cap[g.sister[a]] > 0.0) {
                mark[u] = 1;
                stack.push_back(u);
            }
        }
    }
    return mark;
}

// Network with terminal arcs folded into one signed capacity per node (positive: from the
// source, negative: to the sink) after pushing min(source, sink) straight through.
struct ReducedNetwork {
    std::vector<int> index;  // original node -> internal node, -1 for terminals
    int n = 0;
    std::vector<double> tr_cap;
    std::vector<EdgeTuple> edges;
    double base_flow = 0.0;

    explicit ReducedNetwork(const FlowNetwork& net) : index(net.nodes, -1) {
        for (int v = 0; v < net.nodes; ++v) {
            if (v != net.source && v != net.sink) index[v] = n++;
        }
        std::vector<double> from_source(n, 0.0), to_sink(n, 0.0);
        edges.reserve(net.arcs.size());
        for (const auto& a : net.arcs) {
            if (a.capacity <= 0.0 || a.from == a.to) continue;
            if (a.to == net.source || a.from == net.sink) continue;  // never carries s-t flow
            if (a.from == net.source && a.to == net.sink) {
                base_flow += a.capacity;
            } else if (a.from == net.source) {
                from_source[index[a.to]] += a.capacity;
            } else if (a.to == net.sink) {
                to_sink[index[a.from]] += a.capacity;
            } else {
                edges.push_back({index[a.from], index[a.to], a.capacity, 0.0});
            }
        }
        tr_cap.resize(n);
        for (int i = 0; i < n; ++i) {
            base_flow += std::min(from_source[i], to_sink[i]);
            tr_cap[i] = from_source[i] - to_sink[i];
        }
    }

    // Canonical cut from the final residual graph and signed terminal capacities.
    FlowResult result(const FlowNetwork& net, const Residual& g, const std::vector<double>& final_tr,
                      double flow) const {
        std::vector<char> seeds(n, 0);
        for (int i = 0; i < n; ++i) seeds[i] = final_tr[i] < 0.0;
        const std::vector<char> sink_side = reaches_sink(g, n, seeds);
        FlowResult r;
        r.value = flow;
        r.source_side.assign(net.nodes, false);
        r.source_side[net.source] = true;
        for (int v = 0; v < net.nodes; ++v) {
            if (index[v] >= 0) r.source_side[v] = !sink_side[index[v]];
        }
        return r;
    }
};

class PushRelabel {
public:
    PushRelabel(int n, const std::vector<double>& tr_cap, const std::vector<EdgeTuple>& edges)
        : n_(n), excess_(n, 0.0), to_sink_(n, 0.0), label_(n, 0), current_(n, 0), count_(n + 2, 0),
          buckets_(n + 1) {
        g_.build(n, edges.size(), [&](std::size_t e) { return edges[e]; });
        for (int i = 0; i < n; ++i) {
            if (tr_cap[i] > 0.0) excess_[i] = tr_cap[i];
            else to_sink_[i] = -tr_cap[i];
        }
        arcs_ = static_cast<long>(g_.head.size());
    }

    double run() {
        global_relabel();
        while (highest_ >= 1) {
            auto& bucket = buckets_[highest_];
            if (bucket.empty()) {
                --highest_;
                continue;
            }
            const int u = bucket.back();
            bucket.pop_back();
            if (label_[u] >= dead() || excess_[u] <= 0.0) continue;  // stale entry after a gap
            discharge(u);
            if (work_ > kGlobalFactor * (n_ + arcs_)) {
                work_ = 0;
                global_relabel();
            }
        }
        return flow_;
    }

    const Residual& residual() const { return g_; }

    // Remaining capacity to the sink as a signed terminal capacity (negative: residual arc to sink).
    std::vector<double> terminal_residual() const {
        std::vector<double> tr(n_);
        for (int i = 0; i < n_; ++i) tr[i] = -to_sink_[i];
        return tr;
    }

private:
    static constexpr long kGlobalFactor = 2;

    int dead() const { return n_ + 1; }

    void activate(int v) {
        if (label_[v] < dead() && excess_[v] > 0.0) {
            buckets_[label_[v]].push_back(v);
            highest_ = std::max(highest_, label_[v]);
        }
    }

    void global_relabel() {
        std::fill(label_.begin(), label_.end(), dead());
        std::fill(count_.begin(), count_.end(), 0);
        std::vector<int> queue;
        queue.reserve(n_);
        for (int i = 0; i < n_; ++i) {
            if (to_sink_[i] > 0.0) {
                label_[i] = 1;
                queue.push_back(i);
            }
        }
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int v = queue[qi];
            for (int a = g_.first[v]; a < g_.first[v + 1]; ++a) {
                const int u = g_.head[a];
                if (label_[u] == dead() && g_.cap[g_.sister[a]] > 0.0) {
                    label_[u] = label_[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        for (auto& b : buckets_) b.clear();
        highest_ = 0;
        for (int i = 0; i < n_; ++i) {
            current_[i] = g_.first[i];
            if (label_[i] < dead()) {
                ++count_[label_[i]];
                activate(i);
            }
        }
    }

    void discharge(int u) {
        while (excess_[u] > 0.0) {
            if (label_[u] == 1 && to_sink_[u] > 0.0) {
                const double delta = std::min(excess_[u], to_sink_[u]);
                to_sink_[u] -= delta;
                excess_[u] -= delta;
                flow_ += delta;
                continue;
            }
            const int end = g_.first[u + 1];
            int& a = current_[u];
            while (a < end && excess_[u] > 0.0) {
                const int v = g_.head[a];
                if (g_.cap[a] > 0.0 && label_[v] == label_[u] - 1) {
                    const double delta = std::min(excess_[u], g_.cap[a]);
                    g_.cap[a] -= delta;
                    g_.cap[g_.sister[a]] += delta;
                    excess_[u] -= delta;
                    const bool was_idle = excess_[v] <= 0.0;
                    excess_[v] += delta;
                    if (was_idle) activate(v);
                    if (excess_[u] <= 0.0) break;
                }
                ++a;
            }
            if (excess_[u] <= 0.0) break;
            relabel(u);
            if (label_[u] >= dead()) break;
        }
    }

    void relabel(int u) {
        const int old = label_[u];
        int best = dead();
        if (to_sink_[u] > 0.0) best = 1;
        for (int a = g_.first[u]; a < g_.first[u + 1]; ++a) {
            if (g_.cap[a] > 0.0) best = std::min(best, label_[g_.head[a]] + 1);
        }
        work_ += 12 + (g_.first[u + 1] - g_.first[u]);
        current_[u] = g_.first[u];
        --count_[old];
        if (count_[old] == 0) {
            // gap: nodes above the empty label can no longer reach the sink
            for (int i = 0; i < n_; ++i) {
                if (label_[i] > old && label_[i] < dead()) {
                    --count_[label_[i]];
                    label_[i] = dead();
                }
            }
            label_[u] = dead();
            return;
        }
        label_[u] = std::min(best, dead());
        if (label_[u] < dead()) ++count_[label_[u]];
    }

    int n_;
    Residual g_;
    std::vector<double> excess_;
    std::vector<double> to_sink_;
    std::vector<int> label_;
    std::vector<int> current_;
    std::vector<int> count_;
    std::vector<std::vector<int>> buckets_;
    int highest_ = 0;
    long arcs_ = 0;
    long work_ = 0;
    double flow_ = 0.0;
};

class BkSolver {
public:
    static constexpr int kNone = -1;
    static constexpr int kTerminal = -2;
    static constexpr int kOrphan = -3;

    BkSolver(int n, std::vector<double> tr_cap, const std::vector<EdgeTuple>& edges)
        : n_(n), tr_cap_(std::move(tr_cap)), parent_(n, kNone), ts_(n, 0), dist_(n, 0), is_sink_(n, 0),
          in_active_(n, 0) {
        g_.build(n, edges.size(), [&](std::size_t e) { return edges[e]; });
    }

    double run() {
        double flow = 0.0;
        for (int i = 0; i < n_; ++i) {
            if (tr_cap_[i] > 0.0) {
                is_sink_[i] = 0;
                parent_[i] = kTerminal;
                set_active(i);
                ts_[i] = 0;
                dist_[i] = 1;
            } else if (tr_cap_[i] < 0.0) {
                is_sink_[i] = 1;
                parent_[i] = kTerminal;
                set_active(i);
                ts_[i] = 0;
                dist_[i] = 1;
            }
        }
        while (true) {
            int i = next_active();
            if (i < 0) break;
            int middle = -1;
            if (!is_sink_[i]) {
                for (int a = g_.first[i]; a < g_.first[i + 1]; ++a) {
                    if (g_.cap[a] <= 0.0) continue;
                    int j = g_.head[a];
                    if (parent_[j] == kNone) {
                        is_sink_[j] = 0;
                        parent_[j] = g_.sister[a];
                        ts_[j] = ts_[i];
                        dist_[j] = dist_[i] + 1;
                        set_active(j);
                    } else if (is_sink_[j]) {
                        middle = a;
                        break;
                    } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                        parent_[j] = g_.sister[a];
                        ts_[j] = ts_[i];
                        dist_[j] = dist_[i] + 1;
                    }
                }
            } else {
                for (int a = g_.first[i]; a < g_.first[i + 1]; ++a) {
                    if (g_.cap[g_.sister[a]] <= 0.0) continue;
                    int j = g_.head[a];
                    if (parent_[j] == kNone) {
                        is_sink_[j] = 1;
                        parent_[j] = g_.sister[a];
                        ts_[j] = ts_[i];
                        dist_[j] = dist_[i] + 1;
                        set_active(j);
                    } else if (!is_sink_[j]) {
                        middle = g_.sister[a];
                        break;
                    } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                        parent_[j] = g_.sister[a];
                        ts_[j] = ts_[i];
                        dist_[j] = dist_[i] + 1;
                    }
                }
            }
            ++time_;
            if (middle >= 0) {
                // node may still have unexplored residual arcs; revisit it first
                active_.push_front(i);
                in_active_[i] = 1;
                flow += augment(middle);
                adopt_orphans();
            }
        }
        return flow;
    }

    const Residual& residual() const { return g_; }
    const std::vector<double>& terminal_residual() const { return tr_cap_; }

private:
    void set_active(int i) {
        if (!in_active_[i]) {
            in_active_[i] = 1;
            active_.push_back(i);
        }
    }

    int next_active() {
        while (!active_.empty()) {
            int i = active_.front();
            active_.pop_front();
            in_active_[i] = 0;
            if (parent_[i] != kNone) return i;
        }
        return -1;
    }

    double augment(int middle) {
        double bottleneck = g_.cap[middle];
        // source tree: arcs from parent to child are sister(parent_[i])
        for (int i = g_.head[g_.sister[middle]];;) {
            int a = parent_[i];
            if (a == kTerminal) {
                bottleneck = std::min(bottleneck, tr_cap_[i]);
                break;
            }
            bottleneck = std::min(bottleneck, g_.cap[g_.sister[a]]);
            i = g_.head[a];
        }
        // sink tree: arcs from child to parent are parent_[i]
        for (int i = g_.head[middle];;) {
            int a = parent_[i];
            if (a == kTerminal) {
                bottleneck = std::min(bottleneck, -tr_cap_[i]);
                break;
            }
            bottleneck = std::min(bottleneck, g_.cap[a]);
            i = g_.head[a];
        }

        g_.cap[g_.sister[middle]] += bottleneck;
        g_.cap[middle] -= bottleneck;
        for (int i = g_.head[g_.sister[middle]];;) {
            int a = parent_[i];
            if (a == kTerminal) {
                tr_cap_[i] -= bottleneck;
                if (tr_cap_[i] <= 0.0) make_orphan(i);
                break;
            }
            g_.cap[a] += bottleneck;
            g_.cap[g_.sister[a]] -= bottleneck;
            if (g_.cap[g_.sister[a]] <= 0.0) make_orphan(i);
            i = g_.head[a];
        }
        for (int i = g_.head[middle];;) {
            int a = parent_[i];
            if (a == kTerminal) {
                tr_cap_[i] += bottleneck;
                if (tr_cap_[i] >= 0.0) make_orphan(i);
                break;
            }
            g_.cap[g_.sister[a]] += bottleneck;
            g_.cap[a] -= bottleneck;
            if (g_.cap[a] <= 0.0) make_orphan(i);
            i = g_.head[a];
        }
        return bottleneck;
    }

    void make_orphan(int i) {
        parent_[i] = kOrphan;
        orphans_.push_back(i);
    }

    // True if the node reaches a terminal through valid parents; sets distance via out-param.
    bool origin_distance(int j, int& d_out) {
        int d = 0;
        int k = j;
        while (true) {
            if (ts_[k] == time_) {
                d += dist_[k];
                break;
            }
            int a = parent_[k];
            ++d;
            if (a == kTerminal) {
                ts_[k] = time_;
                dist_[k] = 1;
                break;
            }
            if (a == kOrphan || a == kNone) return false;
            k = g_.head[a];
        }
        // cache distances along the path
        for (k = j; ts_[k] != time_; k = g_.head[parent_[k]]) {
            ts_[k] = time_;
            dist_[k] = d--;
        }
        d_out = dist_[j];
        return true;
    }

    void adopt_orphans() {
        while (!orphans_.empty()) {
            int i = orphans_.front();
            orphans_.pop_front();
            const bool sink_tree = is_sink_[i];
            int best_arc = kNone;
            int best_d = std::numeric_limits<int>::max();
            for (int a = g_.first[i]; a < g_.first[i + 1]; ++a) {
                double residual = sink_tree ? g_.cap[a] : g_.cap[g_.sister[a]];
                if (residual <= 0.0) continue;
                int j = g_.head[a];
                if (parent_[j] == kNone || parent_[j] == kOrphan || is_sink_[j] != is_sink_[i]) continue;
                int d = 0;
                if (origin_distance(j, d) && d < best_d) {
                    best_d = d;
                    best_arc = a;
                }
            }
            if (best_arc != kNone) {
                parent_[i] = best_arc;
                ts_[i] = time_;
                dist_[i] = best_d + 1;
                continue;
            }
            // no valid parent: free the node
            for (int a = g_.first[i]; a < g_.first[i + 1]; ++a) {
                int j = g_.head[a];
                int pa = parent_[j];
                if (pa == kNone || is_sink_[j] != is_sink_[i]) continue;
                double residual = sink_tree ? g_.cap[a] : g_.cap[g_.sister[a]];
                if (residual > 0.0) set_active(j);
                if (pa != kTerminal && pa != kOrphan && g_.head[pa] == i) make_orphan(j);
            }
            parent_[i] = kNone;
        }
    }

    int n_;
    Residual g_;
    std::vector<double> tr_cap_;
    std::vector<int> parent_;
    std::vector<int> ts_;
    std::vector<int> dist_;
    std::vector<char> is_sink_;
    std::vector<char> in_active_;
    std::deque<int> active_;
    std::deque<int> orphans_;
    int time_ = 0;
};

}  // namespace

FlowResult maxflow_bk(const FlowNetwork& net) {
    net.validate();
    const ReducedNetwork red(net);
    BkSolver solver(red.n, red.tr_cap, red.edges);
    const double flow = red.base_flow + solver.run();
    return red.result(net, solver.residual(), solver.terminal_residual(), flow);
}

FlowResult maxflow_push_relabel(const FlowNetwork& net) {
    net.validate();
    const ReducedNetwork red(net);
    PushRelabel solver(red.n, red.tr_cap, red.edges);
    const double flow = red.base_flow + solver.run();
    return red.result(net, solver.residual(), solver.terminal_residual(), flow);
}

FlowResult maxflow_edmonds_karp(const FlowNetwork& net) {
    net.validate();
    std::vector<EdgeTuple> edges;
    edges.reserve(net.arcs.size());
    for (const auto& a : net.arcs) {
        if (a.from != a.to) edges.push_back({a.from, a.to, a.capacity, 0.0});
    }
    Residual g;
    g.build(net.nodes, edges.size(), [&](std::size_t e) { return edges[e]; });

    double flow = 0.0;
    std::vector<int> via(net.nodes);
    while (true) {
        std::fill(via.begin(), via.end(), -1);
        std::queue<int> q;
        q.push(net.source);
        via[net.source] = -2;
        while (!q.empty() && via[net.sink] == -1) {
            int u = q.front();
            q.pop();
            for (int a = g.first[u]; a < g.first[u + 1]; ++a) {
                int v = g.head[a];
                if (g.cap[a] > 0.0 && via[v] == -1) {
                    via[v] = a;
                    q.push(v);
                }
            }
        }
        if (via[net.sink] == -1) break;
        double b = std::numeric_limits<double>::infinity();
        for (int v = net.sink; v != net.source; v = g.head[g.sister[via[v]]]) b = std::min(b, g.cap[via[v]]);
        for (int v = net.sink; v != net.source; v = g.head[g.sister[via[v]]]) {
            g.cap[via[v]] -= b;
            g.cap[g.sister[via[v]]] += b;
        }
        flow += b;
    }
    std::vector<char> seeds(net.nodes, 0);
    seeds[net.sink] = 1;
    const std::vector<char> sink_side = reaches_sink(g, net.nodes, seeds);
    FlowResult result;
    result.value = flow;
    result.source_side.assign(net.nodes, false);
    for (int v = 0; v < net.nodes; ++v) result.source_side[v] = !sink_side[v];
    return result;
}

FlowResult maxflow_mincut(const FlowNetwork& net, MaxflowSolver solver) {
    switch (solver) {
        case MaxflowSolver::PushRelabel: return maxflow_push_relabel(net);
        case MaxflowSolver::BoykovKolmogorov: return maxflow_bk(net);
        case MaxflowSolver::EdmondsKarp: return maxflow_edmonds_karp(net);
    }
    return maxflow_push_relabel(net);
}

}  // namespace grapl
