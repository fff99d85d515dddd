// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "trimask/error.hpp"
#include "trimask/fusion.hpp"

namespace trimask {

/// Cell codes for mask-evolution grids.
enum class CellCode : std::uint8_t { Pruned = 0, Only2D = 1, Both = 2, Only3D = 3 };

constexpr CellCode cell_code(bool keep2d, bool keep3d) {
    if (keep2d && keep3d) return CellCode::Both;
    if (keep2d) return CellCode::Only2D;
    if (keep3d) return CellCode::Only3D;
    return CellCode::Pruned;
}

inline std::size_t grid_side(std::size_t num_patches) {
    auto side = static_cast<std::size_t>(std::llround(std::sqrt(double(num_patches))));
    if (side * side != num_patches) {
        throw Error(ErrorCode::NonSquarePatchCount, std::to_string(num_patches) + " patches do not form a square grid");
    }
    return side;
}

/// Row-major side x side grid of cell codes for one step.
inline std::vector<std::vector<std::uint8_t>> mask_grid(const RetentionMask& mask) {
    const std::size_t side = grid_side(mask.num_patches());
    std::vector<std::vector<std::uint8_t>> grid(side, std::vector<std::uint8_t>(side));
    for (std::size_t p = 0; p < mask.num_patches(); ++p) {
        grid[p / side][p % side] = static_cast<std::uint8_t>(cell_code(mask.mask2d[p], mask.mask3d[p]));
    }
    return grid;
}

/// One CSV block per step, introduced by a "# t=N" line and separated by a
/// blank line.
inline void write_mask_grids(std::ostream& out, std::span<const RetentionMask> masks) {
    if (!masks.empty()) grid_side(masks.front().num_patches());
    for (std::size_t i = 0; i < masks.size(); ++i) {
        if (i != 0) out << '\n';
        out << "# t=" << masks[i].step_index << '\n';
        for (const auto& row : mask_grid(masks[i])) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c != 0) out << ',';
                out << int(row[c]);
            }
            out << '\n';
        }
    }
}

}  // namespace trimask
