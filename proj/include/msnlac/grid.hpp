#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "msnlac/error.hpp"

namespace msnlac::grid {

// Row-major 2-D array. Index (x, y) addresses column x of row y.
template <typename T>
class Raster {
public:
    Raster() = default;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        require(width > 0 && height > 0, "raster dimensions must be positive");
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data))
    {
        require(width > 0 && height > 0, "raster dimensions must be positive");
        require(data_.size() == static_cast<std::size_t>(width) * height,
                "raster data length does not match width*height");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    const std::vector<T>& vector() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const
    {
        return width_ == other.width() && height_ == other.height();
    }

    bool operator==(const Raster&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Field = Raster<double>;
// 1 = foreground (object), 0 = background.
using BinaryMask = Raster<std::uint8_t>;

// Intensity image: finite, non-negative values. Immutable after construction.
class Image {
public:
    Image() = default;
    Image(int width, int height, std::vector<double> data);
    explicit Image(Field pixels);

    int width() const { return pixels_.width(); }
    int height() const { return pixels_.height(); }
    std::size_t size() const { return pixels_.size(); }
    double operator()(int x, int y) const { return pixels_(x, y); }
    double operator[](std::size_t i) const { return pixels_[i]; }
    std::span<const double> data() const { return pixels_.data(); }
    const Field& pixels() const { return pixels_; }

    bool operator==(const Image&) const = default;

private:
    Field pixels_;
};

struct Pyramid {
    std::vector<Image> levels; // levels[0] is the input, each next level half size
    double smoothing_scale = 0.8;
};

// Whole-sample symmetric reflection (..., 2, 1, 0, 1, 2, ...) of an index into [0, n).
inline int mirror_index(int i, int n)
{
    if (n == 1)
        return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0)
        i += period;
    return i < n ? i : period - i;
}

// Raster I/O. PGM (P5, 8 or 16 bit, big-endian) or raw little-endian float32
// with a `<path>.json` sidecar holding {"width":W,"height":H}.
Image load_image(const std::filesystem::path& path);
void save_pgm(const Field& values, const std::filesystem::path& path, int maxval);
void save_raw(const Field& values, const std::filesystem::path& path);
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
// Any non-zero pixel is foreground.
BinaryMask load_mask(const std::filesystem::path& path);

std::vector<double> gaussian_kernel(double sigma);
Field gaussian_smooth(const Field& field, double sigma);
Image gaussian_smooth(const Image& img, double sigma);

// Keeps samples (2x, 2y); output dims are floor(dims / 2).
Field downsample2(const Field& field);
Image downsample2(const Image& img);
BinaryMask downsample2(const BinaryMask& mask);

// Bilinear interpolation with sample alignment: output(2x, 2y) = input(x, y).
// Target dims must lie in {2w, 2w+1} x {2h, 2h+1}.
Field upsample2_field(const Field& field, int target_width, int target_height);

int max_pyramid_levels(int width, int height);
Pyramid build_pyramid(const Image& img, int levels, double sigma0 = 0.8);

} // namespace msnlac::grid
