#include "grapl/network.hpp"

#include "grapl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace grapl {

namespace k = kernels::omp;
using kernels::ConvSpec;
using kernels::Shape4;

void NetworkShape::validate() const {
    if (channels < 1) throw PreconditionError("network: channels must be >= 1");
    if (patch_h < kMinPatchSide || patch_w < kMinPatchSide) {
        throw PreconditionError("network: patch must be at least 5x5, got " + std::to_string(patch_w) + "x" +
                                std::to_string(patch_h));
    }
    if (k0 < 1) throw PreconditionError("network: k0 must be >= 1");
}

std::string_view learnable_name(int tensor) {
    static constexpr std::string_view kNames[kLearnableCount] = {
        "conv1.weight", "conv1.bias", "bn1.weight",   "bn1.bias",    "conv2.weight",
        "conv2.bias",   "bn2.weight", "bn2.bias",     "head.weight", "head.bias"};
    return kNames[tensor];
}

std::array<std::size_t, kLearnableCount> learnable_sizes(const NetworkShape& s) {
    const std::size_t c1 = NetworkShape::kConv1, c2 = NetworkShape::kConv2;
    return {c1 * s.channels * 9, c1, c1, c1, c2 * c1 * 9, c2, c2, c2,
            static_cast<std::size_t>(s.k0) * s.head_dim(), static_cast<std::size_t>(s.k0)};
}

void NetworkParams::validate() const {
    shape.validate();
    const auto sizes = learnable_sizes(shape);
    for (int t = 0; t < kLearnableCount; ++t) {
        if (learnable[t].size() != sizes[t]) {
            throw PreconditionError("network: tensor " + std::string(learnable_name(t)) + " has the wrong size");
        }
        for (double v : learnable[t]) {
            if (!std::isfinite(v)) throw PreconditionError("network: non-finite parameter in " + std::string(learnable_name(t)));
        }
    }
    if (bn1_mean.size() != NetworkShape::kConv1 || bn1_var.size() != NetworkShape::kConv1 ||
        bn2_mean.size() != NetworkShape::kConv2 || bn2_var.size() != NetworkShape::kConv2) {
        throw PreconditionError("network: running statistics have the wrong size");
    }
    for (const auto* v : {&bn1_var, &bn2_var}) {
        for (double x : *v) {
            if (!(x > 0.0) || !std::isfinite(x)) throw PreconditionError("network: running variance must be positive");
        }
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw PreconditionError("network: dropout rate must be in [0, 1)");
}

NetworkParams init_network(const NetworkShape& shape, std::uint64_t seed, double dropout_rate) {
    shape.validate();
    NetworkParams p;
    p.shape = shape;
    p.dropout_rate = dropout_rate;
    const auto sizes = learnable_sizes(shape);
    for (int t = 0; t < kLearnableCount; ++t) p.learnable[t].assign(sizes[t], 0.0);

    std::mt19937_64 rng(seed);
    auto fill = [&](int weight, int bias, double fan_in) {
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
        for (double& v : p.learnable[weight]) v = u(rng);
        for (double& v : p.learnable[bias]) v = u(rng);
    };
    fill(kConv1Weight, kConv1Bias, 9.0 * shape.channels);
    fill(kConv2Weight, kConv2Bias, 9.0 * NetworkShape::kConv1);
    fill(kHeadWeight, kHeadBias, static_cast<double>(shape.head_dim()));
    std::fill(p.learnable[kBn1Gamma].begin(), p.learnable[kBn1Gamma].end(), 1.0);
    std::fill(p.learnable[kBn2Gamma].begin(), p.learnable[kBn2Gamma].end(), 1.0);
    p.bn1_mean.assign(NetworkShape::kConv1, 0.0);
    p.bn1_var.assign(NetworkShape::kConv1, 1.0);
    p.bn2_mean.assign(NetworkShape::kConv2, 0.0);
    p.bn2_var.assign(NetworkShape::kConv2, 1.0);
    return p;
}

DropoutMasks sample_dropout(const NetworkShape& shape, int batch, double rate, std::mt19937_64& rng) {
    DropoutMasks m;
    if (rate <= 0.0) return m;
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    auto draw = [&](std::size_t n) {
        std::vector<double> v(n);
        for (double& x : v) x = keep(rng) ? scale : 0.0;
        return v;
    };
    const std::size_t n = static_cast<std::size_t>(batch);
    m.input = draw(n * shape.channels * shape.patch_h * shape.patch_w);
    m.act1 = draw(n * NetworkShape::kConv1 * (shape.patch_h - 2) * (shape.patch_w - 2));
    m.act2 = draw(n * NetworkShape::kConv2 * shape.head_h() * shape.head_w());
    return m;
}

namespace {

std::size_t plane(const Shape4& s) { return static_cast<std::size_t>(s.h) * s.w; }

void check_batch(const NetworkParams& params, const PatchBatch& batch) {
    const NetworkShape& s = params.shape;
    if (batch.channels != s.channels || batch.height != s.patch_h || batch.width != s.patch_w) {
        throw PreconditionError("network: patch batch shape does not match the network");
    }
    if (batch.count < 1) throw PreconditionError("network: empty patch batch");
}

void check_mask(const std::vector<double>& mask, std::size_t expected) {
    if (!mask.empty() && mask.size() != expected) throw PreconditionError("network: dropout mask has the wrong size");
}

// BN (batch or running statistics) followed by tanh and optional dropout, all in place.
void bn_tanh_dropout(const std::vector<double>& z, const Shape4& s, const std::vector<double>& gamma,
                     const std::vector<double>& beta, const std::vector<double>& mean, std::vector<double>& inv_std,
                     const std::vector<double>& var, double eps, const std::vector<double>* mask,
                     std::vector<double>& xhat, std::vector<double>& a, std::vector<double>& h) {
    const std::size_t pl = plane(s);
    inv_std.resize(s.c);
    for (int c = 0; c < s.c; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    xhat.resize(s.size());
    a.resize(s.size());
    h.resize(s.size());
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * pl;
            for (std::size_t i = base; i < base + pl; ++i) {
                xhat[i] = (z[i] - mean[c]) * inv_std[c];
                a[i] = std::tanh(gamma[c] * xhat[i] + beta[c]);
                h[i] = mask ? a[i] * (*mask)[i] : a[i];
            }
        }
    }
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        auto z = logits.row(r);
        auto y = probs.row(r);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (int c = 0; c < logits.cols; ++c) sum += (y[c] = std::exp(z[c] - mx));
        for (double& v : y) v /= sum;
    }
}

// Per-row log-sum-exp, used for a cross-entropy that stays finite when a probability underflows.
std::vector<double> log_normalizers(const Matrix& logits) {
    std::vector<double> lse(logits.rows);
    for (int r = 0; r < logits.rows; ++r) {
        auto z = logits.row(r);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - mx);
        lse[r] = mx + std::log(sum);
    }
    return lse;
}

double continuity_term(const Matrix& probs, int grid_d) {
    double c = 0.0;
    for (int p = 0; p < probs.rows; ++p) {
        const int row = p / grid_d, col = p % grid_d;
        for (int q : {row > 0 ? p - grid_d : -1, col > 0 ? p - 1 : -1}) {
            if (q < 0) continue;
            for (int k = 0; k < probs.cols; ++k) c += std::abs(probs(p, k) - probs(q, k));
        }
    }
    return c;
}

struct MaskSet {
    const std::vector<double>* input = nullptr;
    const std::vector<double>* act1 = nullptr;
    const std::vector<double>* act2 = nullptr;
};

MaskSet active_masks(const DropoutMasks* masks, bool enabled) {
    if (!enabled) return {};
    auto pick = [](const std::vector<double>& m) { return m.empty() ? nullptr : &m; };
    return {pick(masks->input), pick(masks->act1), pick(masks->act2)};
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

// Backward through tanh(gamma * xhat + beta) with dropout; returns dL/dz of the BN input.
void bn_tanh_backward(const std::vector<double>& dh, const Shape4& s, const std::vector<double>* mask,
                      const std::vector<double>& a, const std::vector<double>& xhat,
                      const std::vector<double>& inv_std, const std::vector<double>& gamma, ForwardMode mode,
                      std::vector<double>& dz, std::vector<double>& dgamma, std::vector<double>& dbeta) {
    const std::size_t pl = plane(s);
    std::vector<double> dy(s.size());
    for (std::size_t i = 0; i < dy.size(); ++i) {
        const double g = mask ? dh[i] * (*mask)[i] : dh[i];
        dy[i] = g * (1.0 - a[i] * a[i]);
    }
    dgamma.assign(s.c, 0.0);
    dbeta.assign(s.c, 0.0);
    dz.resize(s.size());
    const double count = static_cast<double>(s.n) * pl;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < s.c; ++c) {
        double sg = 0.0, sgx = 0.0;
        for (int n = 0; n < s.n; ++n) {
            const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * pl;
            for (std::size_t i = base; i < base + pl; ++i) {
                sg += dy[i];
                sgx += dy[i] * xhat[i];
            }
        }
        dbeta[c] = sg;
        dgamma[c] = sgx;
        const double gs = gamma[c] * inv_std[c];
        for (int n = 0; n < s.n; ++n) {
            const std::size_t base = (static_cast<std::size_t>(n) * s.c + c) * pl;
            for (std::size_t i = base; i < base + pl; ++i) {
                dz[i] = mode == ForwardMode::Train ? gs * (dy[i] - (sg + xhat[i] * sgx) / count) : gs * dy[i];
            }
        }
    }
}

}  // namespace

ForwardCache forward_cached(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                            const DropoutMasks* masks) {
    check_batch(params, batch);
    const NetworkShape& ns = params.shape;
    const bool drop = mode == ForwardMode::Train && masks != nullptr;
    ForwardCache fc;
    fc.in_shape = {batch.count, ns.channels, ns.patch_h, ns.patch_w};
    const ConvSpec spec1{NetworkShape::kConv1, 3, 3}, spec2{NetworkShape::kConv2, 3, 3};
    fc.s1 = kernels::conv_output_shape(fc.in_shape, spec1);
    fc.s2 = kernels::conv_output_shape(fc.s1, spec2);
    if (drop) {
        check_mask(masks->input, fc.in_shape.size());
        check_mask(masks->act1, fc.s1.size());
        check_mask(masks->act2, fc.s2.size());
    }
    const MaskSet mk = active_masks(masks, drop);

    fc.x0 = batch.data;
    if (const auto* m = mk.input) {
        for (std::size_t i = 0; i < fc.x0.size(); ++i) fc.x0[i] *= (*m)[i];
    }

    std::vector<double> z(fc.s1.size());
    k::conv2d_forward(fc.x0, fc.in_shape, params.tensor(kConv1Weight), params.tensor(kConv1Bias), spec1, z);
    std::vector<double> mean, var;
    if (mode == ForwardMode::Train) {
        mean.resize(fc.s1.c);
        var.resize(fc.s1.c);
        k::channel_moments(z, fc.s1, mean, var);
        fc.stats.mean1 = mean;
        fc.stats.var1 = var;
        fc.stats.count1 = static_cast<std::size_t>(fc.s1.n) * plane(fc.s1);
    } else {
        mean = params.bn1_mean;
        var = params.bn1_var;
    }
    bn_tanh_dropout(z, fc.s1, params.tensor(kBn1Gamma), params.tensor(kBn1Beta), mean, fc.inv_std1, var, params.bn_eps,
                    mk.act1, fc.xhat1, fc.a1, fc.h1);

    z.assign(fc.s2.size(), 0.0);
    k::conv2d_forward(fc.h1, fc.s1, params.tensor(kConv2Weight), params.tensor(kConv2Bias), spec2, z);
    if (mode == ForwardMode::Train) {
        mean.assign(fc.s2.c, 0.0);
        var.assign(fc.s2.c, 0.0);
        k::channel_moments(z, fc.s2, mean, var);
        fc.stats.mean2 = mean;
        fc.stats.var2 = var;
        fc.stats.count2 = static_cast<std::size_t>(fc.s2.n) * plane(fc.s2);
    } else {
        mean = params.bn2_mean;
        var = params.bn2_var;
    }
    bn_tanh_dropout(z, fc.s2, params.tensor(kBn2Gamma), params.tensor(kBn2Beta), mean, fc.inv_std2, var, params.bn_eps,
                    mk.act2, fc.xhat2, fc.a2, fc.h2);

    fc.logits = Matrix(batch.count, ns.k0);
    k::dense_forward(fc.h2, batch.count, ns.head_dim(), params.tensor(kHeadWeight), params.tensor(kHeadBias), ns.k0,
                     fc.logits.data);
    softmax_rows(fc.logits, fc.probs);
    return fc;
}

Matrix forward_patches(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                       const DropoutMasks* masks) {
    return forward_cached(params, batch, mode, masks).probs;
}

Matrix patch_logits(const NetworkParams& params, const PatchBatch& batch, ForwardMode mode,
                    const DropoutMasks* masks) {
    return forward_cached(params, batch, mode, masks).logits;
}

LossBreakdown compute_loss(const Matrix& probs, const Matrix& targets, int grid_d, double mu) {
    if (probs.rows != targets.rows || probs.cols != targets.cols) {
        throw PreconditionError("loss: targets do not match the network output");
    }
    if (grid_d < 1 || grid_d * grid_d != probs.rows) throw PreconditionError("loss: grid side does not match the batch");
    LossBreakdown l;
    l.mu = mu;
    for (std::size_t i = 0; i < probs.data.size(); ++i) {
        if (targets.data[i] != 0.0) {
            l.cross_entropy -= targets.data[i] * std::log(std::max(probs.data[i], std::numeric_limits<double>::min()));
        }
    }
    l.continuity = continuity_term(probs, grid_d);
    l.total = l.cross_entropy + mu * l.continuity;
    return l;
}

LossResult loss_and_gradients(const NetworkParams& params, const PatchBatch& batch, const Matrix& targets,
                              int grid_d, double mu, ForwardMode mode, const DropoutMasks* masks) {
    ForwardCache fc = forward_cached(params, batch, mode, masks);
    const NetworkShape& ns = params.shape;
    const int n = batch.count, kk = ns.k0;
    if (targets.rows != n || targets.cols != kk) throw PreconditionError("loss: targets do not match the batch");
    if (grid_d < 1 || grid_d * grid_d != n) throw PreconditionError("loss: grid side does not match the batch");

    LossResult r;
    r.loss.mu = mu;
    const std::vector<double> lse = log_normalizers(fc.logits);
    for (int p = 0; p < n; ++p) {
        for (int c = 0; c < kk; ++c) {
            if (targets(p, c) != 0.0) r.loss.cross_entropy -= targets(p, c) * (fc.logits(p, c) - lse[p]);
        }
    }
    r.loss.continuity = continuity_term(fc.probs, grid_d);
    r.loss.total = r.loss.cross_entropy + mu * r.loss.continuity;

    // dL/dlogits: cross-entropy part y * sum(t) - t, continuity part through the softmax Jacobian
    Matrix gy(n, kk);
    if (mu != 0.0) {
        for (int p = 0; p < n; ++p) {
            const int row = p / grid_d, col = p % grid_d;
            for (int q : {row > 0 ? p - grid_d : -1, col > 0 ? p - 1 : -1}) {
                if (q < 0) continue;
                for (int c = 0; c < kk; ++c) {
                    const double s = mu * sign(fc.probs(p, c) - fc.probs(q, c));
                    gy(p, c) += s;
                    gy(q, c) -= s;
                }
            }
        }
    }
    Matrix dz(n, kk);
    for (int p = 0; p < n; ++p) {
        double tsum = 0.0, dot = 0.0;
        for (int c = 0; c < kk; ++c) {
            tsum += targets(p, c);
            dot += gy(p, c) * fc.probs(p, c);
        }
        for (int c = 0; c < kk; ++c) {
            const double y = fc.probs(p, c);
            dz(p, c) = y * tsum - targets(p, c) + y * (gy(p, c) - dot);
        }
    }

    const auto sizes = learnable_sizes(ns);
    for (int t = 0; t < kLearnableCount; ++t) r.grads[t].assign(sizes[t], 0.0);
    const MaskSet mk = active_masks(masks, mode == ForwardMode::Train && masks != nullptr);

    std::vector<double> dh2(fc.s2.size());
    k::dense_backward(dz.data, fc.h2, n, ns.head_dim(), params.tensor(kHeadWeight), kk, dh2, r.grads[kHeadWeight],
                      r.grads[kHeadBias]);
    std::vector<double> dz2;
    bn_tanh_backward(dh2, fc.s2, mk.act2, fc.a2, fc.xhat2, fc.inv_std2,
                     params.tensor(kBn2Gamma), mode, dz2, r.grads[kBn2Gamma], r.grads[kBn2Beta]);
    const ConvSpec spec1{NetworkShape::kConv1, 3, 3}, spec2{NetworkShape::kConv2, 3, 3};
    k::conv2d_backward_params(dz2, fc.h1, fc.s1, spec2, r.grads[kConv2Weight], r.grads[kConv2Bias]);
    std::vector<double> dh1(fc.s1.size());
    k::conv2d_backward_input(dz2, fc.s1, params.tensor(kConv2Weight), spec2, dh1);
    std::vector<double> dz1;
    bn_tanh_backward(dh1, fc.s1, mk.act1, fc.a1, fc.xhat1, fc.inv_std1,
                     params.tensor(kBn1Gamma), mode, dz1, r.grads[kBn1Gamma], r.grads[kBn1Beta]);
    k::conv2d_backward_params(dz1, fc.x0, fc.in_shape, spec1, r.grads[kConv1Weight], r.grads[kConv1Bias]);

    r.stats = std::move(fc.stats);
    r.probs = std::move(fc.probs);
    return r;
}

void update_running_stats(NetworkParams& params, const BatchStats& stats) {
    const double m = params.bn_momentum;
    auto blend = [m](std::vector<double>& run_mean, std::vector<double>& run_var, const std::vector<double>& mean,
                     const std::vector<double>& var, std::size_t count) {
        if (mean.size() != run_mean.size() || var.size() != run_var.size()) {
            throw PreconditionError("update_running_stats: statistics do not match the network");
        }
        const double unbias = count > 1 ? static_cast<double>(count) / (count - 1.0) : 1.0;
        for (std::size_t c = 0; c < mean.size(); ++c) {
            run_mean[c] = (1.0 - m) * run_mean[c] + m * mean[c];
            run_var[c] = (1.0 - m) * run_var[c] + m * var[c] * unbias;
        }
    };
    blend(params.bn1_mean, params.bn1_var, stats.mean1, stats.var1, stats.count1);
    blend(params.bn2_mean, params.bn2_var, stats.mean2, stats.var2, stats.count2);
}

LogitMap forward_full(const NetworkParams& params, const Image& image) {
    const NetworkShape& ns = params.shape;
    if (image.channels != ns.channels) throw PreconditionError("forward_full: image channels do not match the network");
    if (image.width < ns.patch_w || image.height < ns.patch_h) {
        throw PreconditionError("forward_full: image is smaller than one patch");
    }
    const PatchBatch whole = gather_window(image, 0, 0, image.width, image.height);
    const Shape4 s0{1, ns.channels, image.height, image.width};
    const ConvSpec spec1{NetworkShape::kConv1, 3, 3}, spec2{NetworkShape::kConv2, 3, 3};
    const ConvSpec head{ns.k0, ns.head_h(), ns.head_w()};
    const Shape4 s1 = kernels::conv_output_shape(s0, spec1), s2 = kernels::conv_output_shape(s1, spec2);
    const Shape4 s3 = kernels::conv_output_shape(s2, head);

    std::vector<double> z(s1.size()), inv_std, xhat, a, h;
    k::conv2d_forward(whole.data, s0, params.tensor(kConv1Weight), params.tensor(kConv1Bias), spec1, z);
    bn_tanh_dropout(z, s1, params.tensor(kBn1Gamma), params.tensor(kBn1Beta), params.bn1_mean, inv_std, params.bn1_var,
                    params.bn_eps, nullptr, xhat, a, h);
    std::vector<double> h1 = std::move(h);
    z.assign(s2.size(), 0.0);
    k::conv2d_forward(h1, s1, params.tensor(kConv2Weight), params.tensor(kConv2Bias), spec2, z);
    h1.clear();
    bn_tanh_dropout(z, s2, params.tensor(kBn2Gamma), params.tensor(kBn2Beta), params.bn2_mean, inv_std, params.bn2_var,
                    params.bn_eps, nullptr, xhat, a, h);

    LogitMap out;
    out.k0 = ns.k0;
    out.height = s3.h;
    out.width = s3.w;
    out.data.assign(s3.size(), 0.0);
    k::conv2d_forward(h, s2, params.tensor(kHeadWeight), params.tensor(kHeadBias), head, out.data);
    return out;
}

}  // namespace grapl
