#include "dehaze/image.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "dehaze/tensor.hpp"

namespace dehaze {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("ppm: " + path + ": " + what);
}

// next whitespace-delimited token, skipping '#' comments
std::string next_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_positive(const std::string& tok, const std::string& path,
                   const char* what) {
    if (tok.empty()) fail(path, std::string("truncated header, missing ") + what);
    size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(tok, &pos);
    } catch (const std::exception&) {
        fail(path, std::string("malformed ") + what + " '" + tok + "'");
    }
    if (pos != tok.size() || v <= 0)
        fail(path, std::string("malformed ") + what + " '" + tok + "'");
    return static_cast<int>(v);
}

uint8_t encode_component(double x) {
    double v = std::floor(255.0 * x + 0.5);  // round half up
    if (v < 0.0) v = 0.0;
    if (v > 255.0) v = 255.0;
    return static_cast<uint8_t>(v);
}

}  // namespace

Image::Image(int h, int w, double fill)
    : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, fill) {}

Image load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    const std::string magic = next_token(in);
    if (magic != "P6") fail(path, "expected magic P6, got '" + magic + "'");
    const int w = parse_positive(next_token(in), path, "width");
    const int h = parse_positive(next_token(in), path, "height");
    const int maxval = parse_positive(next_token(in), path, "maxval");
    if (maxval != 255)
        fail(path, "unsupported maxval " + std::to_string(maxval) +
                       " (only 255 is accepted)");
    // the header terminator is exactly one whitespace byte (already consumed
    // by next_token)
    Image img(h, w);
    std::vector<uint8_t> raw(static_cast<size_t>(h) * w * 3);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        fail(path, "truncated payload, expected " + std::to_string(raw.size()) +
                       " bytes");
    for (size_t i = 0; i < raw.size(); ++i)
        img.pixels[i] = static_cast<double>(raw[i]) / 255.0;
    return img;
}

void save_ppm(const Image& img, const std::string& path) {
    if (img.height <= 0 || img.width <= 0)
        throw std::runtime_error("ppm: " + path + ": empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.pixels.size());
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = encode_component(img.pixels[i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) fail(path, "write failed");
}

void save_gray_ppm(const std::vector<double>& values, int height, int width,
                   const std::string& path) {
    if (values.size() != static_cast<size_t>(height) * width)
        throw std::runtime_error("ppm: " + path + ": value count mismatch");
    Image img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = values[static_cast<size_t>(y) * width + x];
    save_ppm(img, path);
}

Tensor image_to_tensor(const Image& img) {
    Tensor t = Tensor::zeros({1, 3, img.height, img.width});
    copy_image_into_batch(img, t, 0);
    return t;
}

void copy_image_into_batch(const Image& img, Tensor& batch, int item) {
    const int h = batch.dim(2), w = batch.dim(3);
    if (img.height != h || img.width != w || batch.dim(1) != 3)
        throw std::invalid_argument("image_to_tensor: shape mismatch");
    double* d = batch.data_mut();
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t base = static_cast<size_t>(item) * 3 * plane;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                d[base + c * plane + static_cast<size_t>(y) * w + x] = img.at(y, x, c);
}

Image tensor_to_image(const Tensor& t, int item) {
    if (t.ndim() != 4 || t.dim(1) != 3)
        throw std::invalid_argument("tensor_to_image: expected [N,3,H,W]");
    const int h = t.dim(2), w = t.dim(3);
    Image img(h, w);
    const size_t plane = static_cast<size_t>(h) * w;
    const size_t base = static_cast<size_t>(item) * 3 * plane;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = t.data()[base + c * plane + static_cast<size_t>(y) * w + x];
                if (v < 0.0) v = 0.0;
                if (v > 1.0) v = 1.0;
                img.at(y, x, c) = v;
            }
    return img;
}

Image crop(const Image& img, int top, int left, int height, int width) {
    if (top < 0 || left < 0 || height <= 0 || width <= 0 ||
        top + height > img.height || left + width > img.width)
        throw std::invalid_argument("crop: rectangle outside image");
    Image out(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(top + y, left + x, c);
    return out;
}

}  // namespace dehaze
