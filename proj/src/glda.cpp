#include "dehaze/glda.hpp"

#include <stdexcept>

namespace dehaze {

std::vector<PatchSpec> glda_sample_specs(int height, int width, RngStream& rng,
                                         const RunConfig& cfg) {
    if (height < cfg.glda_min_patch || width < cfg.glda_min_patch)
        throw std::invalid_argument(
            "glda: image smaller than the minimum patch size");
    const int max_h = std::min(cfg.glda_max_patch, height);
    const int max_w = std::min(cfg.glda_max_patch, width);
    const int count =
        1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(cfg.glda_max_patches)));
    std::vector<PatchSpec> specs(static_cast<size_t>(count));
    for (auto& s : specs) {
        s.height = cfg.glda_min_patch +
                   static_cast<int>(rng.uniform_int(
                       static_cast<uint64_t>(max_h - cfg.glda_min_patch + 1)));
        s.width = cfg.glda_min_patch +
                  static_cast<int>(rng.uniform_int(
                      static_cast<uint64_t>(max_w - cfg.glda_min_patch + 1)));
        s.top = static_cast<int>(
            rng.uniform_int(static_cast<uint64_t>(height - s.height + 1)));
        s.left = static_cast<int>(
            rng.uniform_int(static_cast<uint64_t>(width - s.width + 1)));
    }
    return specs;
}

GldaResult glda_apply(const Image& clean, const Image& hazy,
                      const std::vector<PatchSpec>& specs) {
    if (clean.height != hazy.height || clean.width != hazy.width)
        throw std::invalid_argument("glda: clean/hazy pair shape mismatch");
    GldaResult r;
    r.augmented = clean;
    r.mask.assign(static_cast<size_t>(clean.height) * clean.width, 0);
    for (const auto& s : specs) {
        if (s.top < 0 || s.left < 0 || s.height <= 0 || s.width <= 0 ||
            s.top + s.height > clean.height || s.left + s.width > clean.width)
            throw std::invalid_argument("glda: patch outside the image");
        for (int y = s.top; y < s.top + s.height; ++y)
            for (int x = s.left; x < s.left + s.width; ++x) {
                r.mask[static_cast<size_t>(y) * clean.width + x] = 1;
                for (int c = 0; c < 3; ++c)
                    r.augmented.at(y, x, c) = hazy.at(y, x, c);
            }
    }
    return r;
}

GldaResult glda(const Image& clean, const Image& hazy, RngStream& rng,
                const RunConfig& cfg) {
    return glda_apply(clean, hazy,
                      glda_sample_specs(clean.height, clean.width, rng, cfg));
}

FlipDecision sample_flips(RngStream& rng) {
    FlipDecision f;
    f.horizontal = rng.bernoulli(0.5);
    f.vertical = rng.bernoulli(0.5);
    return f;
}

Image apply_flips(const Image& img, FlipDecision f) {
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        const int sy = f.vertical ? img.height - 1 - y : y;
        for (int x = 0; x < img.width; ++x) {
            const int sx = f.horizontal ? img.width - 1 - x : x;
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

void random_flips(Image& a, Image& b, RngStream& rng) {
    if (a.height != b.height || a.width != b.width)
        throw std::invalid_argument("random_flips: pair shape mismatch");
    const FlipDecision f = sample_flips(rng);
    a = apply_flips(a, f);
    b = apply_flips(b, f);
}

}  // namespace dehaze
