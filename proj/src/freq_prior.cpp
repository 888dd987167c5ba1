#include "dehaze/freq_prior.hpp"

#include <cmath>
#include <stdexcept>

namespace dehaze {

namespace {

Tensor depthwise_filter(const Tensor& x, const Tensor& kernel, int pad) {
    // per-channel filtering: fold channels into the batch axis
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor flat = reshape(x, {n * c, 1, h, w});
    Tensor y = conv2d(pad_reflect(flat, pad), kernel, 1, 0);
    return reshape(y, {n, c, h, w});
}

void check_min_size(const Tensor& x, int min_hw, const char* op) {
    if (x.ndim() != 4)
        throw std::invalid_argument(std::string(op) + ": expected [N,C,H,W]");
    if (x.dim(2) < min_hw || x.dim(3) < min_hw)
        throw std::invalid_argument(std::string(op) + ": image smaller than " +
                                    std::to_string(min_hw) + "x" +
                                    std::to_string(min_hw));
}

std::vector<double> planar_from_tensor(const Tensor& t) {
    return std::vector<double>(t.data(), t.data() + t.size());
}

}  // namespace

std::vector<double> gaussian7_taps() {
    const double sigma = 1.5;
    std::vector<double> k(7);
    double s = 0.0;
    for (int i = 0; i < 7; ++i) {
        const double d = i - 3;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        s += k[i];
    }
    for (double& v : k) v /= s;
    return k;
}

const Tensor& gaussian7_kernel() {
    static const Tensor k = [] {
        const auto taps = gaussian7_taps();
        std::vector<double> kk(49);
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) kk[i * 7 + j] = taps[i] * taps[j];
        return Tensor::from({1, 1, 7, 7}, std::move(kk));
    }();
    return k;
}

const Tensor& laplacian3_kernel() {
    static const Tensor k = Tensor::from(
        {1, 1, 3, 3}, {0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0});
    return k;
}

Tensor low_freq_t(const Tensor& x) {
    check_min_size(x, 7, "low_freq");
    return depthwise_filter(x, gaussian7_kernel(), 3);
}

Tensor high_freq_raw_t(const Tensor& x) {
    check_min_size(x, 3, "high_freq");
    return depthwise_filter(x, laplacian3_kernel(), 1);
}

Tensor high_freq_t(const Tensor& x) {
    return minmax_normalize_items(high_freq_raw_t(x));
}

Tensor prior_lf_input_t(const Tensor& x) {
    return concat({x, low_freq_t(x)}, 1);
}

Tensor prior_hf_input_t(const Tensor& x) {
    return concat({x, high_freq_t(x)}, 1);
}

Image low_freq(const Image& img) {
    NoGradGuard ng;
    return tensor_to_image(low_freq_t(image_to_tensor(img)));
}

Image high_freq(const Image& img) {
    NoGradGuard ng;
    return tensor_to_image(high_freq_t(image_to_tensor(img)));
}

std::vector<double> high_freq_raw(const Image& img) {
    NoGradGuard ng;
    return planar_from_tensor(high_freq_raw_t(image_to_tensor(img)));
}

PriorPair make_prior_pair(const Image& img) {
    NoGradGuard ng;
    const Tensor x = image_to_tensor(img);
    PriorPair p;
    p.height = img.height;
    p.width = img.width;
    p.lf_input = planar_from_tensor(prior_lf_input_t(x));
    p.hf_input = planar_from_tensor(prior_hf_input_t(x));
    return p;
}

}  // namespace dehaze
