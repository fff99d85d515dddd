// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string_view>

namespace trimask {

/// Subset of {2D, 3D} a stage proposes to keep for one patch.
struct CandidateSet {
    bool has2d = false;
    bool has3d = false;

    static constexpr CandidateSet none() { return {false, false}; }
    static constexpr CandidateSet only2d() { return {true, false}; }
    static constexpr CandidateSet only3d() { return {false, true}; }
    static constexpr CandidateSet both() { return {true, true}; }

    constexpr bool empty() const { return !has2d && !has3d; }
    constexpr int size() const { return int(has2d) + int(has3d); }

    constexpr CandidateSet operator&(CandidateSet o) const { return {has2d && o.has2d, has3d && o.has3d}; }
    constexpr CandidateSet operator|(CandidateSet o) const { return {has2d || o.has2d, has3d || o.has3d}; }
    /// Subset test.
    constexpr bool operator<=(CandidateSet o) const { return (!has2d || o.has2d) && (!has3d || o.has3d); }
    constexpr bool operator==(const CandidateSet&) const = default;
};

constexpr std::string_view to_string(CandidateSet c) {
    if (c.has2d && c.has3d) return "{2D,3D}";
    if (c.has2d) return "{2D}";
    if (c.has3d) return "{3D}";
    return "{}";
}

inline std::ostream& operator<<(std::ostream& os, CandidateSet c) { return os << to_string(c); }

}  // namespace trimask
