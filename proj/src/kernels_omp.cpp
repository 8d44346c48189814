#include "grapl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

namespace grapl::kernels::omp {

namespace {

inline std::size_t plane(const Shape4& s) { return static_cast<std::size_t>(s.h) * s.w; }

// Convolutions run as im2col + small matrix products over chunks of output positions. The
// chunk size depends only on the layer shape, so results are identical for any thread count.
constexpr std::size_t kColumnBudget = 1 << 18;  // doubles per im2col buffer

struct ConvGeometry {
    Shape4 in;
    Shape4 out;
    ConvSpec spec;
    int taps;  // in.c * kh * kw, rows of the column matrix

    ConvGeometry(const Shape4& s, const ConvSpec& k)
        : in(s), out(conv_output_shape(s, k)), spec(k), taps(s.c * k.kh * k.kw) {}

    std::size_t positions_per_chunk() const {
        return std::max<std::size_t>(64, kColumnBudget / static_cast<std::size_t>(taps));
    }
    int samples_per_chunk() const {
        return static_cast<int>(std::max<std::size_t>(1, positions_per_chunk() / plane(out)));
    }
};

// col[k][j - begin] = input value under tap k for output position j (positions enumerate n, y, x).
void im2col(const double* in, const ConvGeometry& g, std::size_t begin, std::size_t end, double* col) {
    const std::size_t count = end - begin, out_plane = plane(g.out);
    for (int c = 0; c < g.in.c; ++c) {
        for (int ky = 0; ky < g.spec.kh; ++ky) {
            for (int kx = 0; kx < g.spec.kw; ++kx) {
                double* dst = col + static_cast<std::size_t>((c * g.spec.kh + ky) * g.spec.kw + kx) * count;
                std::size_t j = begin;
                while (j < end) {
                    const std::size_t n = j / out_plane, p = j % out_plane;
                    const int y = static_cast<int>(p / g.out.w), x = static_cast<int>(p % g.out.w);
                    const std::size_t run = std::min<std::size_t>(g.out.w - x, end - j);
                    const double* src = in + ((n * g.in.c + c) * g.in.h + y + ky) * g.in.w + x + kx;
                    std::copy(src, src + run, dst + (j - begin));
                    j += run;
                }
            }
        }
    }
}

// Gathers a [n][o][p] tensor's positions [begin, end) into rows[o][j - begin], or scatters back.
template <bool kGather>
void transpose_positions(std::conditional_t<kGather, const double*, double*> tensor, int channels,
                         std::size_t out_plane, std::size_t begin, std::size_t end,
                         std::conditional_t<kGather, double*, const double*> rows) {
    const std::size_t count = end - begin;
    for (int o = 0; o < channels; ++o) {
        std::size_t j = begin;
        while (j < end) {
            const std::size_t n = j / out_plane, p = j % out_plane;
            const std::size_t run = std::min(out_plane - p, end - j);
            double* t_ptr = const_cast<double*>(tensor + (n * channels + o) * out_plane + p);
            double* r_ptr = const_cast<double*>(rows + static_cast<std::size_t>(o) * count + (j - begin));
            if constexpr (kGather) std::copy(t_ptr, t_ptr + run, r_ptr);
            else std::copy(r_ptr, r_ptr + run, t_ptr);
            j += run;
        }
    }
}

}  // namespace

void conv2d_forward(std::span<const double> in, const Shape4& s, std::span<const double> weight,
                    std::span<const double> bias, const ConvSpec& k, std::span<double> out) {
    const ConvGeometry g(s, k);
    const std::size_t total = static_cast<std::size_t>(g.out.n) * plane(g.out);
    const std::size_t chunk = g.positions_per_chunk();
    const long chunks = static_cast<long>((total + chunk - 1) / chunk);
#pragma omp parallel
    {
        std::vector<double> col(static_cast<std::size_t>(g.taps) * chunk), rows(static_cast<std::size_t>(k.out_c) * chunk);
#pragma omp for schedule(static)
        for (long ci = 0; ci < chunks; ++ci) {
            const std::size_t begin = ci * chunk, end = std::min(total, begin + chunk), count = end - begin;
            im2col(in.data(), g, begin, end, col.data());
            for (int o = 0; o < k.out_c; ++o) {
                double* acc = rows.data() + static_cast<std::size_t>(o) * count;
                std::fill(acc, acc + count, bias[o]);
                const double* w = weight.data() + static_cast<std::size_t>(o) * g.taps;
                for (int t = 0; t < g.taps; ++t) {
                    const double wv = w[t];
                    const double* cr = col.data() + static_cast<std::size_t>(t) * count;
#pragma omp simd
                    for (std::size_t j = 0; j < count; ++j) acc[j] += wv * cr[j];
                }
            }
            transpose_positions<false>(out.data(), k.out_c, plane(g.out), begin, end, rows.data());
        }
    }
}

void conv2d_backward_input(std::span<const double> grad_out, const Shape4& s, std::span<const double> weight,
                           const ConvSpec& k, std::span<double> grad_in) {
    const ConvGeometry g(s, k);
    const std::size_t out_plane = plane(g.out), in_plane = plane(s);
    const int spc = g.samples_per_chunk();
    const long chunks = (s.n + spc - 1) / spc;
#pragma omp parallel
    {
        const std::size_t cap = static_cast<std::size_t>(spc) * out_plane;
        std::vector<double> rows(static_cast<std::size_t>(k.out_c) * cap), gcol(static_cast<std::size_t>(g.taps) * cap);
#pragma omp for schedule(static)
        for (long ci = 0; ci < chunks; ++ci) {
            const int n0 = static_cast<int>(ci) * spc, n1 = std::min(s.n, n0 + spc);
            const std::size_t begin = n0 * out_plane, end = n1 * out_plane, count = end - begin;
            transpose_positions<true>(grad_out.data(), k.out_c, out_plane, begin, end, rows.data());
            for (int t = 0; t < g.taps; ++t) {
                double* gc = gcol.data() + static_cast<std::size_t>(t) * count;
                std::fill(gc, gc + count, 0.0);
                for (int o = 0; o < k.out_c; ++o) {
                    const double wv = weight[static_cast<std::size_t>(o) * g.taps + t];
                    const double* r = rows.data() + static_cast<std::size_t>(o) * count;
#pragma omp simd
                    for (std::size_t j = 0; j < count; ++j) gc[j] += wv * r[j];
                }
            }
            std::fill(grad_in.data() + static_cast<std::size_t>(n0) * s.c * in_plane,
                      grad_in.data() + static_cast<std::size_t>(n1) * s.c * in_plane, 0.0);
            for (int c = 0; c < s.c; ++c) {
                for (int ky = 0; ky < k.kh; ++ky) {
                    for (int kx = 0; kx < k.kw; ++kx) {
                        const double* gc = gcol.data() + static_cast<std::size_t>((c * k.kh + ky) * k.kw + kx) * count;
                        for (int n = n0; n < n1; ++n) {
                            double* gi = grad_in.data() + (static_cast<std::size_t>(n) * s.c + c) * in_plane;
                            const double* src = gc + static_cast<std::size_t>(n - n0) * out_plane;
                            for (int y = 0; y < g.out.h; ++y) {
                                double* grow = gi + static_cast<std::size_t>(y + ky) * s.w + kx;
                                const double* srow = src + static_cast<std::size_t>(y) * g.out.w;
#pragma omp simd
                                for (int x = 0; x < g.out.w; ++x) grow[x] += srow[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_params(std::span<const double> grad_out, std::span<const double> in, const Shape4& s,
                            const ConvSpec& k, std::span<double> grad_weight, std::span<double> grad_bias) {
    const ConvGeometry g(s, k);
    const std::size_t out_plane = plane(g.out);
    const int spc = g.samples_per_chunk();
    const long chunks = (s.n + spc - 1) / spc;
    const std::size_t per_chunk = static_cast<std::size_t>(k.out_c) * (g.taps + 1);
    std::vector<double> partial(per_chunk * chunks, 0.0);
#pragma omp parallel
    {
        const std::size_t cap = static_cast<std::size_t>(spc) * out_plane;
        std::vector<double> rows(static_cast<std::size_t>(k.out_c) * cap), col(static_cast<std::size_t>(g.taps) * cap);
#pragma omp for schedule(static)
        for (long ci = 0; ci < chunks; ++ci) {
            const int n0 = static_cast<int>(ci) * spc, n1 = std::min(s.n, n0 + spc);
            const std::size_t begin = n0 * out_plane, end = n1 * out_plane, count = end - begin;
            transpose_positions<true>(grad_out.data(), k.out_c, out_plane, begin, end, rows.data());
            im2col(in.data(), g, begin, end, col.data());
            double* part = partial.data() + per_chunk * ci;
            for (int o = 0; o < k.out_c; ++o) {
                const double* r = rows.data() + static_cast<std::size_t>(o) * count;
                double gb = 0.0;
#pragma omp simd reduction(+ : gb)
                for (std::size_t j = 0; j < count; ++j) gb += r[j];
                part[static_cast<std::size_t>(o) * (g.taps + 1) + g.taps] = gb;
                for (int t = 0; t < g.taps; ++t) {
                    const double* cr = col.data() + static_cast<std::size_t>(t) * count;
                    double acc = 0.0;
#pragma omp simd reduction(+ : acc)
                    for (std::size_t j = 0; j < count; ++j) acc += r[j] * cr[j];
                    part[static_cast<std::size_t>(o) * (g.taps + 1) + t] = acc;
                }
            }
        }
    }
    std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
    for (long ci = 0; ci < chunks; ++ci) {
        const double* part = partial.data() + per_chunk * ci;
        for (int o = 0; o < k.out_c; ++o) {
            for (int t = 0; t < g.taps; ++t) {
                grad_weight[static_cast<std::size_t>(o) * g.taps + t] += part[static_cast<std::size_t>(o) * (g.taps + 1) + t];
            }
            grad_bias[o] += part[static_cast<std::size_t>(o) * (g.taps + 1) + g.taps];
        }
    }
}

void dense_forward(std::span<const double> in, int n, int in_dim, std::span<const double> weight,
                   std::span<const double> bias, int out_dim, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (int b = 0; b < n; ++b) {
        const double* x = in.data() + static_cast<std::size_t>(b) * in_dim;
        for (int k = 0; k < out_dim; ++k) {
            const double* wk = weight.data() + static_cast<std::size_t>(k) * in_dim;
            double acc = 0.0;
#pragma omp simd reduction(+ : acc)
            for (int i = 0; i < in_dim; ++i) acc += wk[i] * x[i];
            out[static_cast<std::size_t>(b) * out_dim + k] = bias[k] + acc;
        }
    }
}

void dense_backward(std::span<const double> grad_out, std::span<const double> in, int n, int in_dim,
                    std::span<const double> weight, int out_dim, std::span<double> grad_in,
                    std::span<double> grad_weight, std::span<double> grad_bias) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < out_dim; ++k) {
        double* gw = grad_weight.data() + static_cast<std::size_t>(k) * in_dim;
        std::fill(gw, gw + in_dim, 0.0);
        double gb = 0.0;
        for (int b = 0; b < n; ++b) {
            const double g = grad_out[static_cast<std::size_t>(b) * out_dim + k];
            const double* x = in.data() + static_cast<std::size_t>(b) * in_dim;
            gb += g;
#pragma omp simd
            for (int i = 0; i < in_dim; ++i) gw[i] += g * x[i];
        }
        grad_bias[k] = gb;
    }
    if (grad_in.empty()) return;
#pragma omp parallel for schedule(static)
    for (int b = 0; b < n; ++b) {
        double* gi = grad_in.data() + static_cast<std::size_t>(b) * in_dim;
        std::fill(gi, gi + in_dim, 0.0);
        for (int k = 0; k < out_dim; ++k) {
            const double g = grad_out[static_cast<std::size_t>(b) * out_dim + k];
            const double* wk = weight.data() + static_cast<std::size_t>(k) * in_dim;
#pragma omp simd
            for (int i = 0; i < in_dim; ++i) gi[i] += wk[i] * g;
        }
    }
}

void channel_moments(std::span<const double> in, const Shape4& s, std::span<double> mean, std::span<double> var) {
    const std::size_t pl = plane(s);
    const double count = static_cast<double>(s.n) * pl;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < s.c; ++c) {
        double sum = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const double* src = in.data() + (static_cast<std::size_t>(n) * s.c + c) * pl;
            for (std::size_t i = 0; i < pl; ++i) sum += src[i];
        }
        const double m = sum / count;
        double sq = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const double* src = in.data() + (static_cast<std::size_t>(n) * s.c + c) * pl;
            for (std::size_t i = 0; i < pl; ++i) {
                const double t = src[i] - m;
                sq += t * t;
            }
        }
        mean[c] = m;
        var[c] = sq / count;
    }
}

void pairwise_distances(std::span<const double> points, int n, int dim, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n; ++p) {
        const double* a = points.data() + static_cast<std::size_t>(p) * dim;
        for (int q = 0; q < n; ++q) {
            const double* b = points.data() + static_cast<std::size_t>(q) * dim;
            double s = 0.0;
            for (int i = 0; i < dim; ++i) {
                const double t = a[i] - b[i];
                s += t * t;
            }
            out[static_cast<std::size_t>(p) * n + q] = std::sqrt(s);
        }
    }
}

}  // namespace grapl::kernels::omp
