#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dehaze/layers.hpp"
#include "dehaze/tensor.hpp"

namespace dehaze {

// PatchGAN-style classifier: six 3x3 conv blocks, strides (2,2,2,1,1,1),
// leaky-ReLU 0.2, batchnorm on blocks 2-5, sigmoid head. One output cell
// covers a 63-pixel receptive field.
struct DiscriminatorConfig {
    int in_channels = 6;
    int width_factor = 4;  // divides 64,128,256,512,512; final block stays 1

    std::vector<int> widths() const;
    static const std::vector<int>& strides();
};

class Discriminator {
  public:
    Discriminator() = default;
    Discriminator(const DiscriminatorConfig& cfg, uint64_t seed,
                  const std::string& name);

    // x [N,in,H,W] with H,W divisible by 8 and >= 16 -> [N,1,H/8,W/8] in (0,1)
    Tensor forward(const Tensor& x, bool training);

    void collect(ParamSet& ps);
    std::vector<Tensor> parameters();
    int64_t param_count();
    const DiscriminatorConfig& config() const { return cfg_; }

  private:
    DiscriminatorConfig cfg_;
    std::string name_;
    Conv2d convs_[6];
    BatchNorm2d bns_[4];
};

// The backward recurrence applied to the default 6-block stack (returns 63).
int discriminator_receptive_field();

}  // namespace dehaze
