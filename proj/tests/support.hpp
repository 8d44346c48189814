#pragma once
// Test helpers and independent oracles. Nothing here calls the library routine it checks.

#include "grapl/image.hpp"
#include "grapl/matrix.hpp"
#include "grapl/maxflow.hpp"
#include "grapl/network.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace grapl::test {

/// Self-deleting scratch directory.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "grapl") {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline Image random_image(int w, int h, int c, std::mt19937_64& rng) {
    Image img(w, h, c);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : img.data) v = u(rng);
    return img;
}

inline double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

/// Two flat colors split by `inside(x, y)`, plus Gaussian noise; `truth` receives labels 1 / 2.
inline Image two_region_image(int w, int h, const std::array<double, 3>& a, const std::array<double, 3>& b,
                              double noise, std::uint64_t seed, const std::function<bool(int, int)>& inside,
                              SegmentationMap* truth = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, noise > 0.0 ? noise : 1.0);
    Image img(w, h, 3);
    if (truth) *truth = SegmentationMap(w, h, 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool in = inside(x, y);
            const auto& col = in ? b : a;
            for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = clamp01(col[ch] + (noise > 0.0 ? n(rng) : 0.0));
            if (truth) truth->at(x, y) = in ? 2 : 1;
        }
    }
    return img;
}

/// Random s-t network on `nodes` nodes (source 0, sink nodes - 1) with integer capacities.
inline FlowNetwork random_network(int nodes, double density, int max_cap, std::mt19937_64& rng) {
    FlowNetwork net;
    net.nodes = nodes;
    net.source = 0;
    net.sink = nodes - 1;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cap(1, max_cap);
    for (int a = 0; a < nodes; ++a) {
        for (int b = 0; b < nodes; ++b) {
            if (a != b && u(rng) < density) net.add_arc(a, b, cap(rng));
        }
    }
    return net;
}

/// Minimum s-t cut by enumerating every source side containing s and not t.
inline double brute_force_min_cut(const FlowNetwork& net) {
    std::vector<int> free_nodes;
    for (int v = 0; v < net.nodes; ++v)
        if (v != net.source && v != net.sink) free_nodes.push_back(v);
    double best = std::numeric_limits<double>::infinity();
    std::vector<char> side(net.nodes, 0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free_nodes.size()); ++mask) {
        std::fill(side.begin(), side.end(), 0);
        side[net.source] = 1;
        for (std::size_t i = 0; i < free_nodes.size(); ++i) side[free_nodes[i]] = (mask >> i) & 1;
        double cut = 0.0;
        for (const auto& a : net.arcs)
            if (side[a.from] && !side[a.to]) cut += a.capacity;
        best = std::min(best, cut);
    }
    return best;
}

/// Potts MRF instance written out independently of the library's structures.
struct PottsInstance {
    int n = 0;
    int k = 0;
    std::vector<std::vector<double>> cost;                // [patch][label-1]
    std::vector<std::tuple<int, int, double>> edges;      // p < q
};

inline double potts_energy(const PottsInstance& inst, const std::vector<int>& labels) {
    double e = 0.0;
    for (int p = 0; p < inst.n; ++p) e += inst.cost[p][labels[p] - 1];
    for (const auto& [p, q, w] : inst.edges)
        if (labels[p] != labels[q]) e += w;
    return e;
}

/// Global minimum over all k^n labelings.
inline double brute_force_potts_min(const PottsInstance& inst) {
    std::vector<int> labels(inst.n, 1);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        best = std::min(best, potts_energy(inst, labels));
        int i = 0;
        while (i < inst.n && labels[i] == inst.k) labels[i++] = 1;
        if (i == inst.n) break;
        ++labels[i];
    }
    return best;
}

/// Best total profit over all injections of the smaller side into the larger one.
inline double brute_force_assignment(const Matrix& profit) {
    const bool rows_small = profit.rows <= profit.cols;
    const int small = rows_small ? profit.rows : profit.cols;
    const int large = rows_small ? profit.cols : profit.rows;
    auto at = [&](int s, int l) { return rows_small ? profit(s, l) : profit(l, s); };
    std::vector<char> used(large, 0);
    std::function<double(int)> rec = [&](int s) -> double {
        if (s == small) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (int l = 0; l < large; ++l) {
            if (used[l]) continue;
            used[l] = 1;
            best = std::max(best, at(s, l) + rec(s + 1));
            used[l] = 0;
        }
        return best;
    };
    return small == 0 ? 0.0 : rec(0);
}

/// IoU of every (pred label, gt label) pair by per-pixel counting.
inline double counting_iou(const SegmentationMap& pred, const SegmentationMap& gt, int a, int b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const bool pa = pred.labels[i] == a, gb = gt.labels[i] == b;
        inter += pa && gb;
        uni += pa || gb;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Randomizes every parameter, including running statistics, so eval mode is non-trivial.
inline void randomize_params(NetworkParams& params, std::mt19937_64& rng, double scale = 0.5) {
    std::uniform_real_distribution<double> u(-scale, scale), pos(0.5, 1.5);
    for (auto& t : params.learnable)
        for (double& v : t) v = u(rng);
    for (double& v : params.learnable[kBn1Gamma]) v = pos(rng);
    for (double& v : params.learnable[kBn2Gamma]) v = pos(rng);
    for (double& v : params.bn1_mean) v = u(rng);
    for (double& v : params.bn2_mean) v = u(rng);
    for (double& v : params.bn1_var) v = pos(rng);
    for (double& v : params.bn2_var) v = pos(rng);
}

/// Straight-line eval-mode forward pass of one patch (planar [c][y][x]) to the head logits.
inline std::vector<double> reference_logits(const NetworkParams& P, const std::vector<double>& patch) {
    const NetworkShape& s = P.shape;
    const int c0 = s.channels, h0 = s.patch_h, w0 = s.patch_w;
    const int c1 = NetworkShape::kConv1, h1 = h0 - 2, w1 = w0 - 2;
    const int c2 = NetworkShape::kConv2, h2 = h0 - 4, w2 = w0 - 4;
    auto conv_bn_tanh = [&](const std::vector<double>& in, int ci, int hi, int wi, int co, const std::vector<double>& W,
                            const std::vector<double>& B, const std::vector<double>& gamma,
                            const std::vector<double>& beta, const std::vector<double>& mean,
                            const std::vector<double>& var) {
        const int ho = hi - 2, wo = wi - 2;
        std::vector<double> out(static_cast<std::size_t>(co) * ho * wo);
        for (int o = 0; o < co; ++o) {
            for (int y = 0; y < ho; ++y) {
                for (int x = 0; x < wo; ++x) {
                    double acc = B[o];
                    for (int c = 0; c < ci; ++c)
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx)
                                acc += W[((o * ci + c) * 3 + ky) * 3 + kx] * in[(c * hi + y + ky) * wi + x + kx];
                    const double bn = (acc - mean[o]) / std::sqrt(var[o] + P.bn_eps) * gamma[o] + beta[o];
                    out[(o * ho + y) * wo + x] = std::tanh(bn);
                }
            }
        }
        return out;
    };
    const auto& L = P.learnable;
    auto a1 = conv_bn_tanh(patch, c0, h0, w0, c1, L[kConv1Weight], L[kConv1Bias], L[kBn1Gamma], L[kBn1Beta],
                           P.bn1_mean, P.bn1_var);
    auto a2 = conv_bn_tanh(a1, c1, h1, w1, c2, L[kConv2Weight], L[kConv2Bias], L[kBn2Gamma], L[kBn2Beta],
                           P.bn2_mean, P.bn2_var);
    const int dim = c2 * h2 * w2;
    std::vector<double> logits(s.k0);
    for (int k = 0; k < s.k0; ++k) {
        double acc = L[kHeadBias][k];
        for (int i = 0; i < dim; ++i) acc += L[kHeadWeight][static_cast<std::size_t>(k) * dim + i] * a2[i];
        logits[k] = acc;
    }
    return logits;
}

inline std::vector<double> softmax(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += (out[i] = std::exp(z[i] - m));
    for (double& v : out) v /= sum;
    return out;
}

/// Largest relative error over every learnable coordinate (central differences).
inline double worst_gradient_error(NetworkParams params, const PatchBatch& batch, const Matrix& targets, int grid_d,
                            double mu, ForwardMode mode, const DropoutMasks* masks, double h = 1e-4,
                            double floor = 1e-4) {
    const LossResult analytic = loss_and_gradients(params, batch, targets, grid_d, mu, mode, masks);
    double worst = 0.0;
    for (int t = 0; t < kLearnableCount; ++t) {
        for (std::size_t i = 0; i < params.learnable[t].size(); ++i) {
            const double saved = params.learnable[t][i];
            params.learnable[t][i] = saved + h;
            const double up = loss_and_gradients(params, batch, targets, grid_d, mu, mode, masks).loss.total;
            params.learnable[t][i] = saved - h;
            const double down = loss_and_gradients(params, batch, targets, grid_d, mu, mode, masks).loss.total;
            params.learnable[t][i] = saved;
            const double numeric = (up - down) / (2.0 * h), a = analytic.grads[t][i];
            worst = std::max(worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor}));
        }
    }
    return worst;
}

/// Random rows on the simplex.
inline Matrix random_distributions(int rows, int cols, std::mt19937_64& rng) {
    Matrix m(rows, cols);
    std::exponential_distribution<double> e(1.0);
    for (int r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < cols; ++c) sum += (m(r, c) = e(rng));
        for (int c = 0; c < cols; ++c) m(r, c) /= sum;
    }
    return m;
}

}  // namespace grapl::test
