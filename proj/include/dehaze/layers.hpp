#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dehaze/rng.hpp"
#include "dehaze/tensor.hpp"

namespace dehaze {

// Named trainable tensors plus non-trainable buffers (batchnorm running
// stats), in a stable registration order used by the optimizer and the
// checkpoint format.
struct ParamSet {
    std::vector<std::pair<std::string, Tensor>> params;
    std::vector<std::pair<std::string, std::vector<double>*>> buffers;

    std::vector<Tensor> tensors() const;
    size_t total_size() const;
    void set_requires_grad(bool on);
};

struct Conv2d {
    Tensor w;  // [out,in,k,k]
    Tensor b;  // [out], undefined when the layer has no bias
    int stride = 1;
    int pad = 0;

    Conv2d() = default;
    // He-normal weights drawn from (seed, "init/<name>"), zero bias
    Conv2d(int in, int out, int ksize, int stride, int pad, bool bias,
           uint64_t seed, const std::string& name);
    Tensor forward(const Tensor& x) const;
    void collect(ParamSet& ps, const std::string& prefix);
};

struct BatchNorm2d {
    Tensor gamma, beta;
    std::vector<double> run_mean, run_var;

    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);
    Tensor forward(const Tensor& x, bool training);
    void collect(ParamSet& ps, const std::string& prefix);
};

// rf <- rf*stride + (k - stride), applied from the last layer back
int receptive_field(const std::vector<std::pair<int, int>>& kernel_stride);

}  // namespace dehaze
