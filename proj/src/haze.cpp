#include "dehaze/haze.hpp"

#include <cmath>
#include <stdexcept>

namespace dehaze {

namespace {

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

std::vector<double> transmission(const std::vector<double>& depth, double beta) {
    check(beta >= 0.0, "transmission: beta must be nonnegative");
    std::vector<double> t(depth.size());
    for (size_t i = 0; i < depth.size(); ++i) {
        check(depth[i] >= 0.0, "transmission: depth must be nonnegative");
        t[i] = std::exp(-beta * depth[i]);
    }
    return t;
}

Image apply_haze(const Image& clean, const HazeParams& params) {
    check(params.depth.size() ==
              static_cast<size_t>(clean.height) * clean.width,
          "apply_haze: depth map does not match image extents");
    for (double a : params.ambient)
        check(a >= 0.0 && a <= 1.0, "apply_haze: ambient light must be in [0,1]");
    const auto t = transmission(params.depth, params.beta);
    Image out(clean.height, clean.width);
    for (int y = 0; y < clean.height; ++y)
        for (int x = 0; x < clean.width; ++x) {
            const double tx = t[static_cast<size_t>(y) * clean.width + x];
            for (int c = 0; c < 3; ++c)
                out.at(y, x, c) =
                    clean.at(y, x, c) * tx + params.ambient[c] * (1.0 - tx);
        }
    return out;
}

Image invert_haze(const Image& hazy, const HazeParams& params, double t_min) {
    check(params.depth.size() == static_cast<size_t>(hazy.height) * hazy.width,
          "invert_haze: depth map does not match image extents");
    const auto t = transmission(params.depth, params.beta);
    for (double tx : t)
        if (tx < t_min)
            throw std::invalid_argument(
                "invert_haze: transmission below t_min, inversion is "
                "ill-conditioned");
    Image out(hazy.height, hazy.width);
    for (int y = 0; y < hazy.height; ++y)
        for (int x = 0; x < hazy.width; ++x) {
            const double tx = t[static_cast<size_t>(y) * hazy.width + x];
            for (int c = 0; c < 3; ++c) {
                double j =
                    (hazy.at(y, x, c) - params.ambient[c] * (1.0 - tx)) / tx;
                if (j < 0.0) j = 0.0;
                if (j > 1.0) j = 1.0;
                out.at(y, x, c) = j;
            }
        }
    return out;
}

std::vector<double> synth_depth(int height, int width, RngStream& rng,
                                DepthKind kind, double d_max) {
    check(height > 0 && width > 0, "synth_depth: extents must be positive");
    std::vector<double> depth(static_cast<size_t>(height) * width, 0.0);
    if (kind == DepthKind::ramp) {
        const double denom =
            std::max(1, (height - 1) + (width - 1));
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                depth[static_cast<size_t>(y) * width + x] =
                    d_max * static_cast<double>(y + x) / denom;
        return depth;
    }

    // blobs: three Gaussian bumps; sigma is kept wide relative to the image
    // so the neighbor-difference bound d_max/8 holds after peak rescaling
    const int kBumps = 3;
    const double m = static_cast<double>(std::min(height, width));
    for (int b = 0; b < kBumps; ++b) {
        const double cy = rng.uniform(0.0, static_cast<double>(height - 1));
        const double cx = rng.uniform(0.0, static_cast<double>(width - 1));
        const double sigma = rng.uniform(0.25, 0.45) * m;
        const double amp = rng.uniform(0.3, 1.0);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double dy = y - cy, dx = x - cx;
                depth[static_cast<size_t>(y) * width + x] +=
                    amp * std::exp(-(dy * dy + dx * dx) * inv2s2);
            }
    }
    double peak = 0.0;
    for (double v : depth) peak = std::max(peak, v);
    if (peak > 0.0)
        for (double& v : depth) v *= d_max / peak;
    return depth;
}

HazeParams sample_haze_params(int height, int width, RngStream& rng,
                              DepthKind kind) {
    HazeParams p;
    p.beta = rng.uniform(0.4, 1.6);
    p.set_ambient(rng.uniform(0.7, 1.0));
    p.depth = synth_depth(height, width, rng, kind);
    return p;
}

}  // namespace dehaze
