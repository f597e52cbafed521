#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>

#include "fclm/image.hpp"
#include "fclm/numerics.hpp"

namespace fclm::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("fclm_test_" + std::to_string(stamp) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline AlphaMatte random_matte(std::size_t w, std::size_t h, Rng& rng) {
    AlphaMatte m(w, h);
    for (double& v : m.values()) v = rng.uniform();
    return m;
}

inline BinaryMask random_mask(std::size_t w, std::size_t h, Rng& rng) {
    BinaryMask m(w, h);
    for (double& v : m.values()) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
    return m;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    DenseMatrix m(r, c);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

inline RgbImage random_rgb(std::size_t w, std::size_t h, Rng& rng) {
    RgbImage img(w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.index(256));
    return img;
}

}  // namespace fclm::test
