#pragma once

#include <array>
#include <vector>

#include "dehaze/image.hpp"
#include "dehaze/rng.hpp"

namespace dehaze {

// Atmospheric scattering model I = J*t + A*(1-t), t = exp(-beta*depth).
struct HazeParams {
    std::array<double, 3> ambient{1.0, 1.0, 1.0};  // A per channel, in [0,1]
    double beta = 1.0;                             // scattering per unit depth
    std::vector<double> depth;                     // H*W, nonnegative

    void set_ambient(double a) { ambient = {a, a, a}; }
};

enum class DepthKind { ramp, blobs };

std::vector<double> transmission(const std::vector<double>& depth, double beta);

Image apply_haze(const Image& clean, const HazeParams& params);

// J = (I - A*(1-t)) / t clamped to [0,1]; any t below t_min is an error.
Image invert_haze(const Image& hazy, const HazeParams& params, double t_min = 0.05);

// Synthetic depth in [0, d_max]: a diagonal ramp, or a sum of smooth
// isotropic bumps rescaled so the peak is d_max.
std::vector<double> synth_depth(int height, int width, RngStream& rng,
                                DepthKind kind, double d_max = 1.0);

// Sampling ranges used by the trainer for synthesis (beta uniform in
// [0.4,1.6], scalar A uniform in [0.7,1.0]).
HazeParams sample_haze_params(int height, int width, RngStream& rng,
                              DepthKind kind = DepthKind::blobs);

}  // namespace dehaze
