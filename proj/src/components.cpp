#include "components.hpp"

#include <stdexcept>

namespace fclm::detail {

Components label_components(const std::vector<std::uint8_t>& mask, std::size_t width,
                            std::size_t height, int connectivity) {
    if (connectivity != 4 && connectivity != 8) {
        throw std::invalid_argument("label_components: connectivity must be 4 or 8");
    }
    Components out;
    out.labels.assign(width * height, 0);
    std::vector<std::size_t> queue;
    queue.reserve(width * height);
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask[start] == 0 || out.labels[start] != 0) {
            continue;
        }
        const auto label = static_cast<std::uint32_t>(out.sizes.size() + 1);
        std::size_t size = 0;
        queue.clear();
        queue.push_back(start);
        out.labels[start] = label;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const std::size_t p = queue[head];
            ++size;
            const long x = static_cast<long>(p % width);
            const long y = static_cast<long>(p / width);
            for (long dy = -1; dy <= 1; ++dy) {
                for (long dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) {
                        continue;
                    }
                    const long nx = x + dx;
                    const long ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= static_cast<long>(width) ||
                        ny >= static_cast<long>(height)) {
                        continue;
                    }
                    const std::size_t q = static_cast<std::size_t>(ny) * width + static_cast<std::size_t>(nx);
                    if (mask[q] != 0 && out.labels[q] == 0) {
                        out.labels[q] = label;
                        queue.push_back(q);
                    }
                }
            }
        }
        out.sizes.push_back(size);
    }
    return out;
}

}  // namespace fclm::detail
