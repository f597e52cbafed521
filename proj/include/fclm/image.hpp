#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fclm {

/// Single-channel row-major image of doubles. The tag distinguishes alpha
/// mattes, binary masks and depth maps at the type level.
template <class Tag>
class Plane {
public:
    Plane() = default;
    Plane(std::size_t width, std::size_t height, double fill = 0.0)
        : width_(width), height_(height), values_(width * height, fill) {}
    Plane(std::size_t width, std::size_t height, std::vector<double> values)
        : width_(width), height_(height), values_(std::move(values)) {
        if (values_.size() != width * height) {
            throw std::invalid_argument("image: value count does not match " +
                                        std::to_string(width) + "x" + std::to_string(height));
        }
    }

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t x, std::size_t y) { return values_[y * width_ + x]; }
    double operator()(std::size_t x, std::size_t y) const { return values_[y * width_ + x]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> values_;
};

struct AlphaTag;
struct MaskTag;
struct DepthTag;

/// Continuous alpha in [0, 1]; also used for probability maps.
using AlphaMatte = Plane<AlphaTag>;
/// Values in {0, 1}.
using BinaryMask = Plane<MaskTag>;
/// Values in [0, 1] after normalization.
using DepthMap = Plane<DepthTag>;

/// Thresholds at 0.5 (>= 0.5 maps to 1).
BinaryMask binarize(const AlphaMatte& alpha, double threshold = 0.5);
AlphaMatte to_matte(const BinaryMask& mask);
/// Clamps every value into [0, 1].
AlphaMatte clamp_unit(AlphaMatte alpha);

template <class A, class B>
void require_same_shape(const Plane<A>& a, const Plane<B>& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                    " vs " + std::to_string(b.width()) + "x" +
                                    std::to_string(b.height()) + ")");
    }
}

/// Interleaved 8-bit RGB.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(std::size_t width, std::size_t height, std::uint8_t fill = 0)
        : width_(width), height_(height), data_(width * height * 3, fill) {}
    RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data);

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    bool empty() const { return data_.empty(); }

    std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c) {
        return data_[(y * width_ + x) * 3 + c];
    }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t c) const {
        return data_[(y * width_ + x) * 3 + c];
    }

    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> data() const { return data_; }

    /// Central crop to the requested size; throws if the image is smaller.
    RgbImage center_crop(std::size_t width, std::size_t height) const;

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> data_;
};

}  // namespace fclm
