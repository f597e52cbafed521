#pragma once

#include <filesystem>
#include <stdexcept>

#include "fclm/image.hpp"

namespace fclm::io {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grayscale PNG as [0, 1]: 8-bit values / 255, 16-bit values / 65535.
/// Color images are reduced to luminance; alpha channels are dropped.
AlphaMatte read_gray(const std::filesystem::path& path);
/// Grayscale PNG thresholded at 0.5.
BinaryMask read_mask(const std::filesystem::path& path);
DepthMap read_depth(const std::filesystem::path& path);
RgbImage read_rgb(const std::filesystem::path& path);

void write_gray8(const std::filesystem::path& path, const AlphaMatte& image);
void write_gray16(const std::filesystem::path& path, const AlphaMatte& image);
void write_rgb(const std::filesystem::path& path, const RgbImage& image);

}  // namespace fclm::io
