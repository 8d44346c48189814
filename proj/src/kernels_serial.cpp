#include "grapl/kernels.hpp"

#include <cmath>

namespace grapl::kernels::serial {

namespace {

inline std::size_t idx4(const Shape4& s, int n, int c, int y, int x) {
    return ((static_cast<std::size_t>(n) * s.c + c) * s.h + y) * s.w + x;
}

inline std::size_t widx(const Shape4& in, const ConvSpec& k, int o, int c, int ky, int kx) {
    return ((static_cast<std::size_t>(o) * in.c + c) * k.kh + ky) * k.kw + kx;
}

}  // namespace

void conv2d_forward(std::span<const double> in, const Shape4& s, std::span<const double> weight,
                    std::span<const double> bias, const ConvSpec& k, std::span<double> out) {
    const Shape4 os = conv_output_shape(s, k);
    for (int n = 0; n < s.n; ++n)
        for (int o = 0; o < k.out_c; ++o)
            for (int y = 0; y < os.h; ++y)
                for (int x = 0; x < os.w; ++x) {
                    double acc = bias[o];
                    for (int c = 0; c < s.c; ++c)
                        for (int ky = 0; ky < k.kh; ++ky)
                            for (int kx = 0; kx < k.kw; ++kx)
                                acc += weight[widx(s, k, o, c, ky, kx)] * in[idx4(s, n, c, y + ky, x + kx)];
                    out[idx4(os, n, o, y, x)] = acc;
                }
}

void conv2d_backward_input(std::span<const double> grad_out, const Shape4& s, std::span<const double> weight,
                           const ConvSpec& k, std::span<double> grad_in) {
    const Shape4 os = conv_output_shape(s, k);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) {
                    double acc = 0.0;
                    for (int o = 0; o < k.out_c; ++o)
                        for (int ky = 0; ky < k.kh; ++ky)
                            for (int kx = 0; kx < k.kw; ++kx) {
                                int oy = y - ky, ox = x - kx;
                                if (oy < 0 || ox < 0 || oy >= os.h || ox >= os.w) continue;
                                acc += weight[widx(s, k, o, c, ky, kx)] * grad_out[idx4(os, n, o, oy, ox)];
                            }
                    grad_in[idx4(s, n, c, y, x)] = acc;
                }
}

void conv2d_backward_params(std::span<const double> grad_out, std::span<const double> in, const Shape4& s,
                            const ConvSpec& k, std::span<double> grad_weight, std::span<double> grad_bias) {
    const Shape4 os = conv_output_shape(s, k);
    for (int o = 0; o < k.out_c; ++o) {
        double gb = 0.0;
        for (int n = 0; n < s.n; ++n)
            for (int y = 0; y < os.h; ++y)
                for (int x = 0; x < os.w; ++x) gb += grad_out[idx4(os, n, o, y, x)];
        grad_bias[o] = gb;
        for (int c = 0; c < s.c; ++c)
            for (int ky = 0; ky < k.kh; ++ky)
                for (int kx = 0; kx < k.kw; ++kx) {
                    double acc = 0.0;
                    for (int n = 0; n < s.n; ++n)
                        for (int y = 0; y < os.h; ++y)
                            for (int x = 0; x < os.w; ++x)
                                acc += grad_out[idx4(os, n, o, y, x)] * in[idx4(s, n, c, y + ky, x + kx)];
                    grad_weight[widx(s, k, o, c, ky, kx)] = acc;
                }
    }
}

void dense_forward(std::span<const double> in, int n, int in_dim, std::span<const double> weight,
                   std::span<const double> bias, int out_dim, std::span<double> out) {
    for (int b = 0; b < n; ++b)
        for (int k = 0; k < out_dim; ++k) {
            double acc = bias[k];
            for (int i = 0; i < in_dim; ++i)
                acc += weight[static_cast<std::size_t>(k) * in_dim + i] * in[static_cast<std::size_t>(b) * in_dim + i];
            out[static_cast<std::size_t>(b) * out_dim + k] = acc;
        }
}

void dense_backward(std::span<const double> grad_out, std::span<const double> in, int n, int in_dim,
                    std::span<const double> weight, int out_dim, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias) {
    for (int k = 0; k < out_dim; ++k) {
        double gb = 0.0;
        for (int b = 0; b < n; ++b) gb += grad_out[static_cast<std::size_t>(b) * out_dim + k];
        grad_bias[k] = gb;
        for (int i = 0; i < in_dim; ++i) {
            double acc = 0.0;
            for (int b = 0; b < n; ++b)
                acc += grad_out[static_cast<std::size_t>(b) * out_dim + k] * in[static_cast<std::size_t>(b) * in_dim + i];
            grad_weight[static_cast<std::size_t>(k) * in_dim + i] = acc;
        }
    }
    if (grad_in.empty()) return;
    for (int b = 0; b < n; ++b)
        for (int i = 0; i < in_dim; ++i) {
            double acc = 0.0;
            for (int k = 0; k < out_dim; ++k)
                acc += weight[static_cast<std::size_t>(k) * in_dim + i] * grad_out[static_cast<std::size_t>(b) * out_dim + k];
            grad_in[static_cast<std::size_t>(b) * in_dim + i] = acc;
        }
}

void channel_moments(std::span<const double> in, const Shape4& s, std::span<double> mean, std::span<double> var) {
    const double count = static_cast<double>(s.n) * s.h * s.w;
    for (int c = 0; c < s.c; ++c) {
        double sum = 0.0;
        for (int n = 0; n < s.n; ++n)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) sum += in[idx4(s, n, c, y, x)];
        double m = sum / count;
        double sq = 0.0;
        for (int n = 0; n < s.n; ++n)
            for (int y = 0; y < s.h; ++y)
                for (int x = 0; x < s.w; ++x) {
                    double t = in[idx4(s, n, c, y, x)] - m;
                    sq += t * t;
                }
        mean[c] = m;
        var[c] = sq / count;
    }
}

void pairwise_distances(std::span<const double> points, int n, int dim, std::span<double> out) {
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                double t = points[static_cast<std::size_t>(p) * dim + i] - points[static_cast<std::size_t>(q) * dim + i];
                s += t * t;
            }
            out[static_cast<std::size_t>(p) * n + q] = std::sqrt(s);
        }
}

}  // namespace grapl::kernels::serial
