#include "grapl/adam.hpp"

#include "grapl/errors.hpp"

#include <cmath>

namespace grapl {

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config) {
    AdamState s;
    s.config = config;
    for (int t = 0; t < kLearnableCount; ++t) {
        s.m[t].assign(params.tensor(t).size(), 0.0);
        s.v[t].assign(params.tensor(t).size(), 0.0);
    }
    return s;
}

void adam_step(NetworkParams& params, const TensorSet& grads, AdamState& state) {
    for (int t = 0; t < kLearnableCount; ++t) {
        if (grads[t].size() != params.tensor(t).size() || state.m[t].size() != grads[t].size()) {
            throw PreconditionError("adam_step: gradient shape does not match the parameters");
        }
    }
    const AdamConfig& c = state.config;
    ++state.step;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (int t = 0; t < kLearnableCount; ++t) {
        std::vector<double>& w = params.tensor(t);
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        const std::vector<double>& g = grads[t];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            w[i] -= c.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + c.eps);
        }
    }
}

}  // namespace grapl
