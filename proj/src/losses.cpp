#include "dehaze/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "dehaze/rng.hpp"

namespace dehaze {

namespace {

constexpr double kLogFloor = 1e-12;

const Tensor& ssim_window() {
    static const Tensor w = [] {
        const SsimParams p;
        std::vector<double> taps(static_cast<size_t>(p.window));
        double s = 0.0;
        for (int i = 0; i < p.window; ++i) {
            const double d = i - (p.window - 1) / 2.0;
            taps[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * p.sigma * p.sigma));
            s += taps[static_cast<size_t>(i)];
        }
        for (auto& v : taps) v /= s;
        std::vector<double> kk(static_cast<size_t>(p.window) * p.window);
        for (int i = 0; i < p.window; ++i)
            for (int j = 0; j < p.window; ++j)
                kk[static_cast<size_t>(i) * p.window + j] =
                    taps[static_cast<size_t>(i)] * taps[static_cast<size_t>(j)];
        return Tensor::from({1, 1, p.window, p.window}, std::move(kk));
    }();
    return w;
}

Tensor window_mean(const Tensor& x) {  // [M,1,H,W] -> valid-region local means
    return conv2d(x, ssim_window(), 1, 0);
}

Tensor he_kernel(int in, int out, uint64_t seed, const char* label) {
    RngStream rng(seed, label);
    std::vector<double> k(static_cast<size_t>(out) * in * 9);
    const double stddev = std::sqrt(2.0 / (in * 9.0));
    for (auto& v : k) v = stddev * rng.normal();
    return Tensor::from({out, in, 3, 3}, std::move(k));
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("psnr: image shapes differ");
    double mse = 0.0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse == 0.0) return 100.0;
    return 10.0 * std::log10(1.0 / mse);
}

Tensor ssim_t(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape() || a.ndim() != 4)
        throw std::invalid_argument("ssim: inputs must share an [N,C,H,W] shape");
    const SsimParams p;
    if (a.dim(2) < p.window || a.dim(3) < p.window)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    const int n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
    const Tensor af = reshape(a, {n * c, 1, h, w});
    const Tensor bf = reshape(b, {n * c, 1, h, w});

    const Tensor mu_a = window_mean(af);
    const Tensor mu_b = window_mean(bf);
    const Tensor mu_aa = mul(mu_a, mu_a);
    const Tensor mu_bb = mul(mu_b, mu_b);
    const Tensor mu_ab = mul(mu_a, mu_b);
    const Tensor sig_aa = sub(window_mean(mul(af, af)), mu_aa);
    const Tensor sig_bb = sub(window_mean(mul(bf, bf)), mu_bb);
    const Tensor sig_ab = sub(window_mean(mul(af, bf)), mu_ab);

    const Tensor num = mul(add(mul(mu_ab, 2.0), p.c1()), add(mul(sig_ab, 2.0), p.c2()));
    const Tensor den =
        mul(add(add(mu_aa, mu_bb), p.c1()), add(add(sig_aa, sig_bb), p.c2()));
    return mean(div(num, den));
}

double ssim(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("ssim: image shapes differ");
    NoGradGuard ng;
    return ssim_t(image_to_tensor(a), image_to_tensor(b)).item();
}

Tensor l1_loss(const Tensor& a, const Tensor& b) { return mean(abs(sub(a, b))); }

PerceptualNet::PerceptualNet(uint64_t seed)
    : k1_(he_kernel(3, 16, seed, "perc.k1")),
      k2_(he_kernel(16, 32, seed, "perc.k2")),
      k3_(he_kernel(32, 64, seed, "perc.k3")) {}

PerceptualNet::PerceptualNet(Tensor k1, Tensor k2, Tensor k3)
    : k1_(std::move(k1)), k2_(std::move(k2)), k3_(std::move(k3)) {
    if (k1_.ndim() != 4 || k2_.ndim() != 4 || k3_.ndim() != 4 ||
        k2_.dim(1) != k1_.dim(0) || k3_.dim(1) != k2_.dim(0))
        throw std::invalid_argument("perceptual: incompatible feature kernels");
}

Tensor PerceptualNet::loss(const Tensor& a, const Tensor& b) const {
    auto block = [](const Tensor& x, const Tensor& k) {
        return maxpool(relu(conv2d(x, k, 1, 1)), 2);
    };
    Tensor fa = a, fb = b;
    Tensor total;
    for (const Tensor* k : {&k1_, &k2_, &k3_}) {
        fa = block(fa, *k);
        fb = block(fb, *k);
        const Tensor d = sub(fa, fb);
        const Tensor term = mean(mul(d, d));
        total = total.defined() ? add(total, term) : term;
    }
    return total;
}

Tensor adversarial_saturating(const Tensor& d_out) {
    return mean(log(clamp_min(sub(1.0, d_out), kLogFloor)));
}

Tensor adversarial_nonsaturating(const Tensor& d_out) {
    return mul(mean(log(clamp_min(d_out, kLogFloor))), -1.0);
}

Tensor generator_loss(const Tensor& real, const Tensor& fake,
                      const Tensor& d_lf_out, const Tensor& d_hf_out,
                      const LossWeights& w, const PerceptualNet& pnet,
                      bool nonsaturating) {
    Tensor loss = add(add(l1_loss(real, fake), sub(1.0, ssim_t(real, fake))),
                      pnet.loss(real, fake));
    auto adv = [&](const Tensor& d) {
        return nonsaturating ? adversarial_nonsaturating(d)
                             : adversarial_saturating(d);
    };
    if (d_lf_out.defined() && w.lambda1 != 0.0)
        loss = add(loss, mul(adv(d_lf_out), w.lambda1));
    if (d_hf_out.defined() && w.lambda2 != 0.0)
        loss = add(loss, mul(adv(d_hf_out), w.lambda2));
    return loss;
}

Tensor discriminator_loss(const Tensor& d_real_out, const Tensor& d_fake_out) {
    const Tensor real_term = mean(log(clamp_min(d_real_out, kLogFloor)));
    const Tensor fake_term = mean(log(clamp_min(sub(1.0, d_fake_out), kLogFloor)));
    return mul(add(real_term, fake_term), -1.0);
}

}  // namespace dehaze
