#pragma once

#include <vector>

#include "dehaze/image.hpp"
#include "dehaze/tensor.hpp"

namespace dehaze {

// 6-channel discriminator inputs: the image concatenated with its
// low-frequency (Gaussian) or normalized high-frequency (Laplacian)
// component. Planar layout, channels 0-2 are the source image untouched.
struct PriorPair {
    int height = 0;
    int width = 0;
    std::vector<double> lf_input;  // [6][H][W]
    std::vector<double> hf_input;  // [6][H][W]
};

// 7x7 Gaussian (sigma 1.5, unit sum) and 3x3 Laplacian stencils as constant
// conv kernels.
const Tensor& gaussian7_kernel();
const Tensor& laplacian3_kernel();
std::vector<double> gaussian7_taps();  // the 1-D kernel, length 7

// Differentiable paths on [N,3,H,W] batches, reflect padding.
Tensor low_freq_t(const Tensor& x);
Tensor high_freq_raw_t(const Tensor& x);
Tensor high_freq_t(const Tensor& x);  // raw response min-max normalized per item
Tensor prior_lf_input_t(const Tensor& x);  // [N,6,H,W]
Tensor prior_hf_input_t(const Tensor& x);  // [N,6,H,W]

// Image-level wrappers (pure functions of the pixel data).
Image low_freq(const Image& img);                   // needs H,W >= 7
Image high_freq(const Image& img);                  // needs H,W >= 3
std::vector<double> high_freq_raw(const Image& img);  // planar [3][H][W]
PriorPair make_prior_pair(const Image& img);

}  // namespace dehaze
