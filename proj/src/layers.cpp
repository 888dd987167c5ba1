#include "dehaze/layers.hpp"

#include <cmath>

namespace dehaze {

std::vector<Tensor> ParamSet::tensors() const {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) out.push_back(t);
    return out;
}

size_t ParamSet::total_size() const {
    size_t n = 0;
    for (const auto& [name, t] : params) n += t.size();
    return n;
}

void ParamSet::set_requires_grad(bool on) {
    for (auto& [name, t] : params) t.set_requires_grad(on);
}

Conv2d::Conv2d(int in, int out, int ksize, int stride_, int pad_, bool bias,
               uint64_t seed, const std::string& name)
    : stride(stride_), pad(pad_) {
    RngStream rng(seed, "init/" + name);
    const size_t n = static_cast<size_t>(out) * in * ksize * ksize;
    std::vector<double> wdata(n);
    const double stddev = std::sqrt(2.0 / (static_cast<double>(in) * ksize * ksize));
    for (auto& v : wdata) v = stddev * rng.normal();
    w = Tensor::from({out, in, ksize, ksize}, std::move(wdata), true);
    w.set_name(name + ".w");
    if (bias) {
        b = Tensor::zeros({out}, true);
        b.set_name(name + ".b");
    }
}

Tensor Conv2d::forward(const Tensor& x) const {
    return b.defined() ? conv2d(x, w, b, stride, pad) : conv2d(x, w, stride, pad);
}

void Conv2d::collect(ParamSet& ps, const std::string& prefix) {
    ps.params.emplace_back(prefix + ".w", w);
    if (b.defined()) ps.params.emplace_back(prefix + ".b", b);
}

BatchNorm2d::BatchNorm2d(int channels)
    : gamma(Tensor::full({channels}, 1.0, true)),
      beta(Tensor::zeros({channels}, true)),
      run_mean(channels, 0.0),
      run_var(channels, 1.0) {}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    return batchnorm(x, gamma, beta, run_mean, run_var, training);
}

void BatchNorm2d::collect(ParamSet& ps, const std::string& prefix) {
    ps.params.emplace_back(prefix + ".gamma", gamma);
    ps.params.emplace_back(prefix + ".beta", beta);
    ps.buffers.emplace_back(prefix + ".run_mean", &run_mean);
    ps.buffers.emplace_back(prefix + ".run_var", &run_var);
}

int receptive_field(const std::vector<std::pair<int, int>>& kernel_stride) {
    int rf = 1;
    for (auto it = kernel_stride.rbegin(); it != kernel_stride.rend(); ++it)
        rf = rf * it->second + (it->first - it->second);
    return rf;
}

}  // namespace dehaze
