#include "dehaze/discriminator.hpp"

#include <stdexcept>

namespace dehaze {

std::vector<int> DiscriminatorConfig::widths() const {
    return {64 / width_factor,  128 / width_factor, 256 / width_factor,
            512 / width_factor, 512 / width_factor, 1};
}

const std::vector<int>& DiscriminatorConfig::strides() {
    static const std::vector<int> s{2, 2, 2, 1, 1, 1};
    return s;
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, uint64_t seed,
                             const std::string& name)
    : cfg_(cfg), name_(name) {
    const auto w = cfg.widths();
    const auto& s = DiscriminatorConfig::strides();
    for (auto v : w)
        if (v < 1)
            throw std::invalid_argument(
                "discriminator: width_factor leaves an empty block");
    int in = cfg.in_channels;
    for (int i = 0; i < 6; ++i) {
        // bias only where no batchnorm follows (blocks 1 and 6)
        const bool bias = i == 0 || i == 5;
        convs_[i] = Conv2d(in, w[static_cast<size_t>(i)], 3, s[static_cast<size_t>(i)],
                           1, bias, seed, name + ".b" + std::to_string(i + 1));
        in = w[static_cast<size_t>(i)];
    }
    for (int i = 0; i < 4; ++i) bns_[i] = BatchNorm2d(w[static_cast<size_t>(i) + 1]);
}

Tensor Discriminator::forward(const Tensor& x, bool training) {
    if (x.ndim() != 4 || x.dim(1) != cfg_.in_channels)
        throw std::invalid_argument(
            "discriminator: expected " + std::to_string(cfg_.in_channels) +
            " input channels, got " +
            std::to_string(x.ndim() == 4 ? x.dim(1) : -1));
    const int h = x.dim(2), w = x.dim(3);
    if (h % 8 != 0 || w % 8 != 0 || h < 16 || w < 16)
        throw std::invalid_argument(
            "discriminator: spatial extents must be >= 16 and divisible by 8");

    Tensor y = leaky_relu(convs_[0].forward(x), 0.2);
    for (int i = 1; i <= 4; ++i)
        y = leaky_relu(bns_[i - 1].forward(convs_[i].forward(y), training), 0.2);
    return sigmoid(convs_[5].forward(y));
}

void Discriminator::collect(ParamSet& ps) {
    for (int i = 0; i < 6; ++i) convs_[i].collect(ps, name_ + ".b" + std::to_string(i + 1));
    for (int i = 0; i < 4; ++i)
        bns_[i].collect(ps, name_ + ".b" + std::to_string(i + 2) + ".bn");
}

std::vector<Tensor> Discriminator::parameters() {
    ParamSet ps;
    collect(ps);
    return ps.tensors();
}

int64_t Discriminator::param_count() {
    ParamSet ps;
    collect(ps);
    return static_cast<int64_t>(ps.total_size());
}

int discriminator_receptive_field() {
    std::vector<std::pair<int, int>> layers;
    for (int s : DiscriminatorConfig::strides()) layers.emplace_back(3, s);
    return receptive_field(layers);
}

}  // namespace dehaze
