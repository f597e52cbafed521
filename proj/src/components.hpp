#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fclm::detail {

/// Connected components of a binary raster. Labels are 1-based in row-major
/// order of each component's first pixel; 0 marks background.
struct Components {
    std::vector<std::uint32_t> labels;
    std::vector<std::size_t> sizes;  // sizes[k] for label k + 1

    std::size_t count() const { return sizes.size(); }
};

Components label_components(const std::vector<std::uint8_t>& mask, std::size_t width,
                            std::size_t height, int connectivity);

}  // namespace fclm::detail
