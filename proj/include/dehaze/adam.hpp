#pragma once

#include <cstdint>
#include <vector>

#include "dehaze/tensor.hpp"

namespace dehaze {

// Per-parameter first/second moments, aligned index-wise with the parameter
// list the state was stepped with. t counts completed steps.
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
    uint64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

// One bias-corrected update from the grads currently on `params`; missing
// grads count as zero. Grads are cleared afterwards.
void adam_step(std::vector<Tensor>& params, AdamState& state);

}  // namespace dehaze
