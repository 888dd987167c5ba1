#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dehaze/config.hpp"
#include "dehaze/layers.hpp"
#include "dehaze/tensor.hpp"

namespace dehaze {

struct GeneratorConfig {
    int base_width = 8;  // 32 / width_factor; level widths base*{1,2,4,8}
    bool saca = true;
    bool msfa = true;

    static GeneratorConfig from_run(const RunConfig& cfg);
    int width(int level) const { return base_width << (level - 1); }  // 1..4
};

// Two chains of 3x3 conv + batchnorm + ReLU.
struct ConvBlock {
    Conv2d c1, c2;
    BatchNorm2d b1, b2;

    ConvBlock() = default;
    ConvBlock(int in, int out, uint64_t seed, const std::string& name);
    Tensor forward(const Tensor& x, bool training);
    void collect(ParamSet& ps, const std::string& prefix);
};

// Non-local (embedded dot-product, softmax over source sites, residual
// projection) followed by softmax channel attention rescaled by C so that
// uniform attention is the identity.
struct SacaBlock {
    int channels = 0;
    Conv2d theta, phi, g, wz;  // 1x1 projections, no bias
    Conv2d attn;               // 1x1 C->C with bias

    SacaBlock() = default;
    SacaBlock(int channels, uint64_t seed, const std::string& name);
    Tensor non_local(const Tensor& x) const;
    Tensor channel_attention(const Tensor& y) const;
    Tensor forward(const Tensor& x) const;
    void collect(ParamSet& ps, const std::string& prefix);

    // 3 half-width projections + output projection + attention conv (and its
    // bias): 3*C*(C/2) + (C/2)*C + C*C + C
    static int64_t param_count_formula(int channels);
};

// pixel shuffle x2 -> conv/bn/relu -> concat skip -> conv/bn/relu
struct UpBlock {
    Conv2d c1, c2;
    BatchNorm2d b1, b2;

    UpBlock() = default;
    UpBlock(int in, int skip, int out, uint64_t seed, const std::string& name);
    Tensor forward(const Tensor& x, const Tensor& skip, bool training);
    void collect(ParamSet& ps, const std::string& prefix);
};

class Generator {
  public:
    Generator(const GeneratorConfig& cfg, uint64_t seed);

    // hazy [N,3,H,W], H and W divisible by 16 and >= 32; output in (0,1)
    Tensor forward(const Tensor& hazy, bool training);

    void collect(ParamSet& ps);
    std::vector<Tensor> parameters();
    int64_t param_count();
    const GeneratorConfig& config() const { return cfg_; }
    SacaBlock& saca_block(int level) { return *saca_[level - 1]; }

  private:
    GeneratorConfig cfg_;
    ConvBlock enc_[4];
    std::optional<SacaBlock> saca_[4];
    Conv2d fuse_;  // bottleneck 1x1; MSFA widens only its input
    UpBlock dec_[4];  // dec_[0] is the deepest decoder stage
    Conv2d head_;
};

}  // namespace dehaze
