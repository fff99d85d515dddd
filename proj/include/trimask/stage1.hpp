// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "trimask/candidate.hpp"
#include "trimask/error.hpp"
#include "trimask/trace.hpp"

namespace trimask {

inline double l1_norm(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0, [](double acc, double x) { return acc + std::abs(x); });
}

/// Feature-norm share of each modality at one patch.
struct Stage1Salience {
    double m2d = 0.5;
    double m3d = 0.5;
    bool degenerate = false;  // both feature vectors are zero
};

struct Stage1Thresholds {
    double tau2d = 0.08;
    double tau3d = 0.20;

    void validate() const {
        if (!(tau2d > 0.0 && tau2d < 1.0 && tau3d > 0.0 && tau3d < 1.0)) {
            throw Error(ErrorCode::InvalidThresholds, "tau2d and tau3d must lie in (0,1)");
        }
        if (!(tau2d < tau3d)) {
            throw Error(ErrorCode::InvalidThresholds,
                        "tau2d (" + std::to_string(tau2d) + ") must be below tau3d (" + std::to_string(tau3d) + ")");
        }
    }
};

inline Stage1Salience stage1_salience(std::span<const double> f2d, std::span<const double> f3d) {
    const double n2d = l1_norm(f2d);
    const double n3d = l1_norm(f3d);
    const double denom = n2d + n3d;
    if (denom == 0.0) return {0.5, 0.5, true};
    const double m2d = n2d / denom;
    return {m2d, 1.0 - m2d, false};
}

inline Stage1Salience stage1_salience(const PatchObservation& patch) { return stage1_salience(patch.f2d, patch.f3d); }

/// Dual-threshold rule on the (smoothed) 3D share. Both boundaries belong
/// to the dual-retention branch.
inline CandidateSet stage1_candidates(double m3d_hat, const Stage1Thresholds& thresholds) {
    thresholds.validate();
    if (m3d_hat < thresholds.tau2d) return CandidateSet::only2d();
    if (m3d_hat > thresholds.tau3d) return CandidateSet::only3d();
    return CandidateSet::both();
}

/// Episode-level reporting statistic: mean of the per-patch shares over
/// every (step, patch) observation.
struct Stage1Average {
    double m2d = 0.0;
    double m3d = 0.0;
};

inline Stage1Average stage1_average(const EpisodeTrace& trace) {
    Stage1Average avg;
    std::size_t n = 0;
    for (const auto& step : trace.steps) {
        for (const auto& p : step.patches) {
            const auto s = stage1_salience(p);
            avg.m2d += s.m2d;
            avg.m3d += s.m3d;
            ++n;
        }
    }
    if (n > 0) {
        avg.m2d /= double(n);
        avg.m3d /= double(n);
    }
    return avg;
}

}  // namespace trimask
