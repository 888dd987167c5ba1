#pragma once

#include <cstdint>

#include "dehaze/image.hpp"
#include "dehaze/layers.hpp"
#include "dehaze/tensor.hpp"

namespace dehaze {

// ---- evaluation metrics -----------------------------------------------------

// 10*log10(1/MSE) on [0,1] images; identical images return the 100 dB cap.
double psnr(const Image& a, const Image& b);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double level = 1.0;  // dynamic range L
    double c1() const { return (k1 * level) * (k1 * level); }
    double c2() const { return (k2 * level) * (k2 * level); }
};

// Mean SSIM over the valid region (no padding), channels averaged; needs
// H,W >= 11. Symmetric, exactly 1 for identical images.
double ssim(const Image& a, const Image& b);

// ---- differentiable losses --------------------------------------------------

Tensor l1_loss(const Tensor& a, const Tensor& b);
Tensor ssim_t(const Tensor& a, const Tensor& b);  // scalar mean SSIM

// Fixed, seeded 3-block feature stack standing in for a pretrained
// perceptual network: (3x3 conv, ReLU, maxpool 2) at widths 16/32/64.
// Alternative weights can be supplied to plug in externally trained filters.
class PerceptualNet {
  public:
    explicit PerceptualNet(uint64_t seed = kDefaultSeed);
    PerceptualNet(Tensor k1, Tensor k2, Tensor k3);

    // Mean squared feature distance summed over the three block outputs.
    Tensor loss(const Tensor& a, const Tensor& b) const;

    static constexpr uint64_t kDefaultSeed = 0x0DE4A2EDF00Dull;

  private:
    Tensor k1_, k2_, k3_;
};

// mean(log(clamp(1 - d, 1e-12))), the saturating generator term as printed.
Tensor adversarial_saturating(const Tensor& d_out);
// -mean(log(clamp(d, 1e-12))), optional non-saturating variant.
Tensor adversarial_nonsaturating(const Tensor& d_out);

struct LossWeights {
    double lambda1 = 0.5;
    double lambda2 = 0.5;
};

// L1 + (1 - SSIM) + perceptual + lambda1*adv(d_lf) + lambda2*adv(d_hf).
// Undefined d tensors or zero lambdas drop their term entirely.
Tensor generator_loss(const Tensor& real, const Tensor& fake,
                      const Tensor& d_lf_out, const Tensor& d_hf_out,
                      const LossWeights& w, const PerceptualNet& pnet,
                      bool nonsaturating = false);

// -mean(log d_real) - mean(log(1 - d_fake)), clamped; one instance per
// discriminator.
Tensor discriminator_loss(const Tensor& d_real_out, const Tensor& d_fake_out);

}  // namespace dehaze
