#pragma once

#include "grapl/image.hpp"
#include "grapl/kernels.hpp"
#include "grapl/matrix.hpp"
#include "grapl/patch_grid.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace grapl {

/// Layer sizes of the patch classifier. Two unpadded 3x3 convolutions shrink a patch by 4
/// pixels per side length, so the head sees 8 x (patch_h - 4) x (patch_w - 4) features.
struct NetworkShape {
    int channels = 3;
    int patch_h = 0;
    int patch_w = 0;
    int k0 = 0;

    static constexpr int kConv1 = 32;
    static constexpr int kConv2 = 8;

    int head_h() const { return patch_h - 4; }
    int head_w() const { return patch_w - 4; }
    int head_dim() const { return kConv2 * head_h() * head_w(); }
    void validate() const;
    bool operator==(const NetworkShape&) const = default;
};

/// Learnable tensors in a fixed order shared by parameters, gradients, and optimizer state.
enum LearnableTensor : int {
    kConv1Weight,
    kConv1Bias,
    kBn1Gamma,
    kBn1Beta,
    kConv2Weight,
    kConv2Bias,
    kBn2Gamma,
    kBn2Beta,
    kHeadWeight,
    kHeadBias,
    kLearnableCount
};

std::string_view learnable_name(int tensor);

using TensorSet = std::array<std::vector<double>, kLearnableCount>;

struct NetworkParams {
    NetworkShape shape;
    TensorSet learnable;  // conv weights [out][in][3][3]; head weight [k0][8][head_h][head_w]
    std::vector<double> bn1_mean, bn1_var, bn2_mean, bn2_var;  // running statistics
    double dropout_rate = 0.2;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    std::vector<double>& tensor(int t) { return learnable[t]; }
    const std::vector<double>& tensor(int t) const { return learnable[t]; }
    void validate() const;
};

/// Expected element count of each learnable tensor for a shape.
std::array<std::size_t, kLearnableCount> learnable_sizes(const NetworkShape& shape);

/// Kaiming-uniform fan-in init (bound 1/sqrt(fan_in) for weights and biases), BN scale 1, shift 0,
/// running mean 0, running variance 1.
NetworkParams init_network(const NetworkShape& shape, std::uint64_t seed, double dropout_rate = 0.2);

enum class ForwardMode { Train, Eval };

/// Inverted-dropout multipliers (0 or 1/(1-rate)) for the three dropout sites. Empty vectors mean identity.
struct DropoutMasks {
    std::vector<double> input;  // [n][c][ph][pw]
    std::vector<double> act1;   // [n][32][ph-2][pw-2]
    std::vector<double> act2;   // [n][8][ph-4][pw-4]
};

DropoutMasks sample_dropout(const NetworkShape& shape, int batch, double rate, std::mt19937_64& rng);

/// Per-channel batch mean and biased variance of both BN inputs, from a train-mode pass.
struct BatchStats {
    std::vector<double> mean1, var1, mean2, var2;
    std::size_t count1 = 0;  // values per channel
    std::size_t count2 = 0;
};

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
    kernels::Shape4 in_shape, s1, s2;
    std::vector<double> x0;        // input after dropout
    std::vector<double> xhat1, a1, h1;
    std::vector<double> inv_std1;  // per channel
    std::vector<double> xhat2, a2, h2;
    std::vector<double> inv_std2;
    Matrix logits;
    Matrix probs;
    BatchStats stats;
};

ForwardCache forward_cached(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                            const DropoutMasks* masks = nullptr);

/// Softmax outputs, one row per patch. Train mode uses batch statistics and the given masks.
Matrix forward_patches(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                       const DropoutMasks* masks = nullptr);

/// Dense-head logits per patch (pre-softmax).
Matrix patch_logits(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                    const DropoutMasks* masks = nullptr);

struct LossBreakdown {
    double cross_entropy = 0.0;
    double continuity = 0.0;
    double total = 0.0;
    double mu = 0.0;
};

struct LossResult {
    LossBreakdown loss;
    TensorSet grads;
    BatchStats stats;
    Matrix probs;
};

/// cross_entropy = sum_p H(target(p), F(p)); continuity = sum_p sum_{up, left} ||F(p) - F(q)||_1
/// on the grid_d x grid_d patch lattice; total = cross_entropy + mu * continuity.
LossBreakdown compute_loss(const Matrix& probs, const Matrix& targets, int grid_d, double mu);

/// Loss and the gradient of every learnable tensor. Running statistics are not touched.
LossResult loss_and_gradients(const NetworkParams& params, const PatchBatch& batch, const Matrix& targets,
                              int grid_d, double mu, ForwardMode mode = ForwardMode::Train,
                              const DropoutMasks* masks = nullptr);

/// Exponential moving average of BN statistics (momentum, unbiased variance).
void update_running_stats(NetworkParams& params, const BatchStats& stats);

/// Logits at every patch position of the image, layout [k][y][x].
struct LogitMap {
    int k0 = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int k, int y, int x) const { return data[(static_cast<std::size_t>(k) * height + y) * width + x]; }
};

/// Eval-mode pass over the whole image with the head applied as a (patch_h-4) x (patch_w-4)
/// convolution. Output is (H - patch_h + 1) x (W - patch_w + 1).
LogitMap forward_full(const NetworkParams& params, const Image& image);

}  // namespace grapl
