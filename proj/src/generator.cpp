#include "dehaze/generator.hpp"

#include <stdexcept>

namespace dehaze {

GeneratorConfig GeneratorConfig::from_run(const RunConfig& cfg) {
    GeneratorConfig g;
    g.base_width = 32 / cfg.width_factor;
    g.saca = cfg.saca;
    g.msfa = cfg.msfa;
    return g;
}

ConvBlock::ConvBlock(int in, int out, uint64_t seed, const std::string& name)
    : c1(in, out, 3, 1, 1, false, seed, name + ".c1"),
      c2(out, out, 3, 1, 1, false, seed, name + ".c2"),
      b1(out),
      b2(out) {}

Tensor ConvBlock::forward(const Tensor& x, bool training) {
    Tensor y = relu(b1.forward(c1.forward(x), training));
    return relu(b2.forward(c2.forward(y), training));
}

void ConvBlock::collect(ParamSet& ps, const std::string& prefix) {
    c1.collect(ps, prefix + ".c1");
    b1.collect(ps, prefix + ".b1");
    c2.collect(ps, prefix + ".c2");
    b2.collect(ps, prefix + ".b2");
}

SacaBlock::SacaBlock(int channels_, uint64_t seed, const std::string& name)
    : channels(channels_),
      theta(channels_, channels_ / 2, 1, 1, 0, false, seed, name + ".theta"),
      phi(channels_, channels_ / 2, 1, 1, 0, false, seed, name + ".phi"),
      g(channels_, channels_ / 2, 1, 1, 0, false, seed, name + ".g"),
      wz(channels_ / 2, channels_, 1, 1, 0, false, seed, name + ".wz"),
      attn(channels_, channels_, 1, 1, 0, true, seed, name + ".attn") {
    if (channels_ % 2 != 0)
        throw std::invalid_argument(
            "saca: channel count must be even for half-width embeddings");
}

Tensor SacaBlock::non_local(const Tensor& x) const {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (c != channels)
        throw std::invalid_argument("saca: channel mismatch");
    const int hw = h * w;
    const int half = c / 2;
    Tensor th = reshape(theta.forward(x), {n, half, hw});
    Tensor ph = reshape(phi.forward(x), {n, half, hw});
    Tensor gx = reshape(g.forward(x), {n, half, hw});
    // att[i,j] = <theta_i, phi_j>, softmax over source sites j
    Tensor att = matmul(th, ph, true, false);
    att = softmax(att, 2);
    Tensor y = matmul(gx, att, false, true);  // y_i = sum_j att[i,j] g_j
    y = wz.forward(reshape(y, {n, half, h, w}));
    return add(x, y);
}

Tensor SacaBlock::channel_attention(const Tensor& y) const {
    Tensor s = softmax(global_avg_pool(attn.forward(y)), 1);
    // rescale by C so uniform attention leaves the features unchanged
    return mul(y, mul(s, static_cast<double>(channels)));
}

Tensor SacaBlock::forward(const Tensor& x) const {
    return channel_attention(non_local(x));
}

void SacaBlock::collect(ParamSet& ps, const std::string& prefix) {
    theta.collect(ps, prefix + ".theta");
    phi.collect(ps, prefix + ".phi");
    g.collect(ps, prefix + ".g");
    wz.collect(ps, prefix + ".wz");
    attn.collect(ps, prefix + ".attn");
}

int64_t SacaBlock::param_count_formula(int c) {
    const int64_t cc = c;
    return 3 * cc * (cc / 2) + (cc / 2) * cc + cc * cc + cc;
}

UpBlock::UpBlock(int in, int skip, int out, uint64_t seed, const std::string& name)
    : c1(in / 4, skip, 3, 1, 1, false, seed, name + ".c1"),
      c2(2 * skip, out, 3, 1, 1, false, seed, name + ".c2"),
      b1(skip),
      b2(out) {
    if (in % 4 != 0)
        throw std::invalid_argument("upblock: input channels not divisible by 4");
}

Tensor UpBlock::forward(const Tensor& x, const Tensor& skip, bool training) {
    Tensor y = pixel_shuffle(x, 2);
    y = relu(b1.forward(c1.forward(y), training));
    // upsampled features first, skip features second (checkpoint stability)
    y = concat({y, skip}, 1);
    return relu(b2.forward(c2.forward(y), training));
}

void UpBlock::collect(ParamSet& ps, const std::string& prefix) {
    c1.collect(ps, prefix + ".c1");
    b1.collect(ps, prefix + ".b1");
    c2.collect(ps, prefix + ".c2");
    b2.collect(ps, prefix + ".b2");
}

Generator::Generator(const GeneratorConfig& cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg.base_width < 4 || cfg.base_width % 4 != 0)
        throw std::invalid_argument(
            "generator: base width must be a positive multiple of 4");
    const int w1 = cfg.width(1), w2 = cfg.width(2), w3 = cfg.width(3),
              w4 = cfg.width(4);
    enc_[0] = ConvBlock(3, w1, seed, "g.enc1");
    enc_[1] = ConvBlock(w1, w2, seed, "g.enc2");
    enc_[2] = ConvBlock(w2, w3, seed, "g.enc3");
    enc_[3] = ConvBlock(w3, w4, seed, "g.enc4");
    if (cfg.saca)
        for (int l = 1; l <= 4; ++l)
            saca_[l - 1].emplace(cfg.width(l), seed, "g.saca" + std::to_string(l));
    const int fuse_in = w4 + (cfg.msfa ? w1 + w2 + w3 + w4 : 0);
    fuse_ = Conv2d(fuse_in, w4, 1, 1, 0, true, seed, "g.fuse");
    dec_[0] = UpBlock(w4, w4, w4, seed, "g.dec4");
    dec_[1] = UpBlock(w4, w3, w3, seed, "g.dec3");
    dec_[2] = UpBlock(w3, w2, w2, seed, "g.dec2");
    dec_[3] = UpBlock(w2, w1, w1, seed, "g.dec1");
    head_ = Conv2d(w1, 3, 1, 1, 0, true, seed, "g.head");
}

Tensor Generator::forward(const Tensor& hazy, bool training) {
    if (hazy.ndim() != 4 || hazy.dim(1) != 3)
        throw std::invalid_argument("generator: input must be [N,3,H,W]");
    const int h = hazy.dim(2), w = hazy.dim(3);
    if (h % 16 != 0 || w % 16 != 0 || h < 32 || w < 32)
        throw std::invalid_argument(
            "generator: spatial extents must be >= 32 and divisible by 16 "
            "(four 2x poolings), got " +
            std::to_string(h) + "x" + std::to_string(w));

    Tensor x = hazy;
    Tensor skips[4];
    for (int l = 0; l < 4; ++l) {
        x = enc_[l].forward(x, training);
        skips[l] = cfg_.saca ? saca_[l]->forward(x) : x;
        x = maxpool(x, 2);
    }

    Tensor latent = x;  // w4 at P/16
    if (cfg_.msfa) {
        latent = concat({latent, maxpool(skips[0], 16), maxpool(skips[1], 8),
                         maxpool(skips[2], 4), maxpool(skips[3], 2)},
                        1);
    }
    latent = fuse_.forward(latent);

    Tensor y = dec_[0].forward(latent, skips[3], training);
    y = dec_[1].forward(y, skips[2], training);
    y = dec_[2].forward(y, skips[1], training);
    y = dec_[3].forward(y, skips[0], training);
    return sigmoid(head_.forward(y));
}

void Generator::collect(ParamSet& ps) {
    for (int l = 0; l < 4; ++l) enc_[l].collect(ps, "g.enc" + std::to_string(l + 1));
    if (cfg_.saca)
        for (int l = 0; l < 4; ++l)
            saca_[l]->collect(ps, "g.saca" + std::to_string(l + 1));
    fuse_.collect(ps, "g.fuse");
    for (int l = 0; l < 4; ++l) dec_[l].collect(ps, "g.dec" + std::to_string(4 - l));
    head_.collect(ps, "g.head");
}

std::vector<Tensor> Generator::parameters() {
    ParamSet ps;
    collect(ps);
    return ps.tensors();
}

int64_t Generator::param_count() {
    ParamSet ps;
    collect(ps);
    return static_cast<int64_t>(ps.total_size());
}

}  // namespace dehaze
