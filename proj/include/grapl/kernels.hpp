#pragma once

// Numeric kernels behind the network and the affinity graph.
//
// Every kernel exists twice with the same signature: `serial` is a direct transcription of
// the formula kept as a test reference, `omp` is the production version (OpenMP, cache
// friendly loop order). Each output element of an `omp` kernel is reduced by exactly one
// thread in a fixed order, so results do not depend on the thread count.

#include <span>

namespace grapl::kernels {

/// Tensor layout [n][c][h][w], contiguous.
struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t size() const { return static_cast<std::size_t>(n) * c * h * w; }
};

/// Unpadded, stride-1 convolution; weights [out_c][in_c][kh][kw].
struct ConvSpec {
    int out_c = 0;
    int kh = 0;
    int kw = 0;
};

inline Shape4 conv_output_shape(const Shape4& in, const ConvSpec& spec) {
    return {in.n, spec.out_c, in.h - spec.kh + 1, in.w - spec.kw + 1};
}

#define GRAPL_KERNEL_DECLS                                                                                        \
    void conv2d_forward(std::span<const double> in, const Shape4& in_shape, std::span<const double> weight,     \
                        std::span<const double> bias, const ConvSpec& spec, std::span<double> out);             \
    /* grad_in is overwritten */                                                                                \
    void conv2d_backward_input(std::span<const double> grad_out, const Shape4& in_shape,                        \
                               std::span<const double> weight, const ConvSpec& spec, std::span<double> grad_in); \
    /* grad_weight and grad_bias are overwritten */                                                             \
    void conv2d_backward_params(std::span<const double> grad_out, std::span<const double> in,                   \
                                const Shape4& in_shape, const ConvSpec& spec, std::span<double> grad_weight,    \
                                std::span<double> grad_bias);                                                   \
    /* out[n][k] = bias[k] + sum_i weight[k][i] * in[n][i] */                                                   \
    void dense_forward(std::span<const double> in, int n, int in_dim, std::span<const double> weight,           \
                       std::span<const double> bias, int out_dim, std::span<double> out);                       \
    void dense_backward(std::span<const double> grad_out, std::span<const double> in, int n, int in_dim,        \
                        std::span<const double> weight, int out_dim, std::span<double> grad_in,                 \
                        std::span<double> grad_weight, std::span<double> grad_bias);                            \
    /* per-channel mean and biased variance over (n, h, w) */                                                  \
    void channel_moments(std::span<const double> in, const Shape4& shape, std::span<double> mean,               \
                         std::span<double> var);                                                                \
    /* out[p][q] = || points[p] - points[q] ||_2, points row-major n x dim */                                   \
    void pairwise_distances(std::span<const double> points, int n, int dim, std::span<double> out);

namespace serial {
GRAPL_KERNEL_DECLS
}  // namespace serial

namespace omp {
GRAPL_KERNEL_DECLS
}  // namespace omp

#undef GRAPL_KERNEL_DECLS

}  // namespace grapl::kernels
