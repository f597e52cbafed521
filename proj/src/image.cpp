#include "fclm/image.hpp"

#include <algorithm>

namespace fclm {

BinaryMask binarize(const AlphaMatte& alpha, double threshold) {
    BinaryMask mask(alpha.width(), alpha.height());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        mask[i] = alpha[i] >= threshold ? 1.0 : 0.0;
    }
    return mask;
}

AlphaMatte to_matte(const BinaryMask& mask) {
    return AlphaMatte(mask.width(), mask.height(),
                      std::vector<double>(mask.values().begin(), mask.values().end()));
}

AlphaMatte clamp_unit(AlphaMatte alpha) {
    for (double& v : alpha.values()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return alpha;
}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width * height * 3) {
        throw std::invalid_argument("RgbImage: data length does not match " +
                                    std::to_string(width) + "x" + std::to_string(height) + "x3");
    }
}

RgbImage RgbImage::center_crop(std::size_t width, std::size_t height) const {
    if (width > width_ || height > height_) {
        throw std::invalid_argument("center_crop: image " + std::to_string(width_) + "x" +
                                    std::to_string(height_) + " smaller than " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    const std::size_t x0 = (width_ - width) / 2;
    const std::size_t y0 = (height_ - height) / 2;
    RgbImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const auto* src = data_.data() + ((y0 + y) * width_ + x0) * 3;
        std::copy(src, src + width * 3, out.data_.data() + y * width * 3);
    }
    return out;
}

}  // namespace fclm
