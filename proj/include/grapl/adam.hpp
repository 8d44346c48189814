#pragma once

#include "grapl/network.hpp"

namespace grapl {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moment accumulators per learnable tensor.
struct AdamState {
    AdamConfig config;
    TensorSet m;
    TensorSet v;
    long step = 0;
};

AdamState make_adam_state(const NetworkParams& params, const AdamConfig& config = {});

/// One bias-corrected Adam update of every learnable tensor. Running BN statistics are untouched.
void adam_step(NetworkParams& params, const TensorSet& grads, AdamState& state);

}  // namespace grapl
