// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace trimask {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based uniform draw in [0,1) keyed by (seed, step, patch), so a
/// draw never depends on iteration order or on how many draws came before.
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t step, std::uint64_t patch) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ step);
    h = mix64(h ^ (patch * 0xd1b54a32d192ed03ULL));
    return double(h >> 11) * 0x1.0p-53;
}

}  // namespace trimask
