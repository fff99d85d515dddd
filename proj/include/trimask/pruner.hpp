// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trimask/config.hpp"
#include "trimask/error.hpp"
#include "trimask/fusion.hpp"

namespace trimask {

inline constexpr const char* kVersion = "1.0.0";

/// Streaming front end over flat row-major buffers, for callers that hold
/// per-step tensors instead of trace files. Shapes are fixed by the first
/// call. Results match prune_step on the equivalent StepObservation.
class Pruner {
public:
    explicit Pruner(RunConfig config) : m_config(std::move(config)), m_state(m_config.pruner.seed) {
        m_config.validate();
    }

    struct Output {
        std::vector<std::uint8_t> mask2d;
        std::vector<std::uint8_t> mask3d;
        StepStats stats;
    };

    Output step(std::span<const double> f2d, std::span<const double> f3d, std::span<const double> a2d,
                std::span<const double> a3d, std::size_t num_patches, std::size_t feat_dim, std::size_t attn_dim) {
        if (m_closed) throw Error(ErrorCode::ClosedHandle, "pruner is closed");
        if (!m_shape) {
            if (num_patches == 0 || feat_dim == 0 || attn_dim == 0) {
                throw Error(ErrorCode::ShapeMismatch, "shape dimensions must be nonzero");
            }
            m_shape = Shape{num_patches, feat_dim, attn_dim};
        }
        if (num_patches != m_shape->patches || feat_dim != m_shape->feat || attn_dim != m_shape->attn) {
            throw Error(ErrorCode::ShapeMismatch, "shape differs from the first step");
        }
        const std::size_t nf = num_patches * feat_dim;
        const std::size_t na = num_patches * attn_dim;
        if (f2d.size() != nf || f3d.size() != nf || a2d.size() != na || a3d.size() != na) {
            throw Error(ErrorCode::ShapeMismatch, "buffer length does not match the declared shape");
        }
        StepObservation obs;
        obs.step_index = m_state.t_seen + 1;
        obs.patches.resize(num_patches);
        for (std::size_t p = 0; p < num_patches; ++p) {
            auto& patch = obs.patches[p];
            patch.patch_id = p;
            patch.f2d.assign(f2d.begin() + std::ptrdiff_t(p * feat_dim), f2d.begin() + std::ptrdiff_t((p + 1) * feat_dim));
            patch.f3d.assign(f3d.begin() + std::ptrdiff_t(p * feat_dim), f3d.begin() + std::ptrdiff_t((p + 1) * feat_dim));
            patch.a2d.assign(a2d.begin() + std::ptrdiff_t(p * attn_dim), a2d.begin() + std::ptrdiff_t((p + 1) * attn_dim));
            patch.a3d.assign(a3d.begin() + std::ptrdiff_t(p * attn_dim), a3d.begin() + std::ptrdiff_t((p + 1) * attn_dim));
        }
        auto outcome = prune_step(m_state, obs, m_config.pruner);
        return {std::move(outcome.mask.mask2d), std::move(outcome.mask.mask3d), outcome.stats};
    }

    void close() { m_closed = true; }
    bool closed() const { return m_closed; }
    const PrunerState& state() const { return m_state; }
    const RunConfig& config() const { return m_config; }

private:
    struct Shape {
        std::size_t patches;
        std::size_t feat;
        std::size_t attn;
    };

    RunConfig m_config;
    PrunerState m_state;
    std::optional<Shape> m_shape;
    bool m_closed = false;
};

}  // namespace trimask
