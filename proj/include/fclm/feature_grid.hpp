#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "fclm/numerics.hpp"

namespace fclm {

/// Patch grid shape; token index = row * cols + col.
struct PatchGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t count() const { return rows * cols; }
    friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// (rows * cols) x dim token matrix laid out on a patch grid.
struct FeatureGrid {
    PatchGrid grid;
    DenseMatrix tokens;

    FeatureGrid() = default;
    FeatureGrid(PatchGrid g, DenseMatrix t) : grid(g), tokens(std::move(t)) {
        if (tokens.rows() != grid.count()) {
            throw std::invalid_argument("FeatureGrid: " + std::to_string(tokens.rows()) +
                                        " tokens for a " + std::to_string(grid.rows) + "x" +
                                        std::to_string(grid.cols) + " grid");
        }
    }

    std::size_t token_count() const { return tokens.rows(); }
    std::size_t dim() const { return tokens.cols(); }

    friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;
};

inline void require_same_shape(const FeatureGrid& a, const FeatureGrid& b, const char* what) {
    if (a.grid != b.grid || a.dim() != b.dim()) {
        throw std::invalid_argument(std::string(what) + ": feature grid shape mismatch");
    }
}

}  // namespace fclm
