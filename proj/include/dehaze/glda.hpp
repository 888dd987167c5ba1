#pragma once

#include <vector>

#include "dehaze/config.hpp"
#include "dehaze/image.hpp"
#include "dehaze/rng.hpp"

namespace dehaze {

// Axis-aligned rectangle fully inside the image; extents within
// [glda_min_patch, glda_max_patch].
struct PatchSpec {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;
};

struct GldaResult {
    Image augmented;
    std::vector<uint8_t> mask;  // H*W, 1 inside the pasted union
};

// Patch count uniform in [1, glda_max_patches]; rectangles i.i.d., overlaps
// allowed.
std::vector<PatchSpec> glda_sample_specs(int height, int width, RngStream& rng,
                                         const RunConfig& cfg);

// Paste `hazy` over `clean` inside the union of the given rectangles.
GldaResult glda_apply(const Image& clean, const Image& hazy,
                      const std::vector<PatchSpec>& specs);

GldaResult glda(const Image& clean, const Image& hazy, RngStream& rng,
                const RunConfig& cfg);

// The same flip decision (each axis independently, p=0.5) applied to both
// images of a pair.
struct FlipDecision {
    bool horizontal = false;
    bool vertical = false;
};
FlipDecision sample_flips(RngStream& rng);
Image apply_flips(const Image& img, FlipDecision f);
void random_flips(Image& a, Image& b, RngStream& rng);

}  // namespace dehaze
