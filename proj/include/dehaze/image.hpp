#pragma once

#include <string>
#include <vector>

namespace dehaze {

class Tensor;

// H x W x 3 interleaved intensities in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // height*width*3, row-major, RGB interleaved

    Image() = default;
    Image(int h, int w, double fill = 0.0);

    double& at(int y, int x, int c) {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    double at(int y, int x, int c) const {
        return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
    }
    size_t size() const { return pixels.size(); }
};

// Binary PPM (P6, maxval 255). Decode maps byte b -> b/255; encode rounds
// half-up and clamps, so save(load(save(x))) is byte-identical.
Image load_ppm(const std::string& path);
void save_ppm(const Image& img, const std::string& path);

// Single-channel [0,1] map written as a gray PPM.
void save_gray_ppm(const std::vector<double>& values, int height, int width,
                   const std::string& path);

// Image <-> [1,3,H,W] / [N,3,H,W] tensor staging (planar channel layout).
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, int item = 0);
void copy_image_into_batch(const Image& img, Tensor& batch, int item);

Image crop(const Image& img, int top, int left, int height, int width);

}  // namespace dehaze
