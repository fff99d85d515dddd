// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "trimask/error.hpp"

namespace trimask {

struct EmaConfig {
    double beta = 0.85;  // momentum
    std::size_t k = 7;   // window size; steps t >= k use the fixed-momentum update

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidConfig, "beta must lie in (0,1)");
        if (k < 2) throw Error(ErrorCode::InvalidConfig, "window size k must be >= 2");
    }
};

enum class Indicator : std::uint8_t { S1_2D, S1_3D, S2_2D, S2_3D };
inline constexpr std::size_t kNumIndicators = 4;

constexpr std::string_view to_string(Indicator id) {
    switch (id) {
        case Indicator::S1_2D: return "s1_2d";
        case Indicator::S1_3D: return "s1_3d";
        case Indicator::S2_2D: return "s2_2d";
        case Indicator::S2_3D: return "s2_3d";
    }
    return "?";
}

inline Indicator parse_indicator(std::string_view s) {
    for (std::size_t i = 0; i < kNumIndicators; ++i) {
        if (to_string(Indicator(i)) == s) return Indicator(i);
    }
    throw Error(ErrorCode::MalformedTrace, "unknown indicator '" + std::string(s) + "'");
}

struct IndicatorTrack {
    double x_hat = 0.0;
    std::size_t t_seen = 0;

    bool operator==(const IndicatorTrack&) const = default;
};

/// One temporal-smoothing step. Observation t = t_seen + 1:
///   t == 1      x_hat = x
///   1 < t < k   running mean, x_hat += (x - x_hat) / t
///   t >= k      x_hat += (1 - beta) (x - x_hat)
/// The incremental forms are algebraically the weighted updates and keep a
/// constant input an exact fixed point.
inline IndicatorTrack ema_update(IndicatorTrack track, double x, const EmaConfig& config) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteValue, "indicator observation is not finite");
    const std::size_t t = track.t_seen + 1;
    if (t == 1) {
        track.x_hat = x;
    } else if (t < config.k) {
        track.x_hat += (x - track.x_hat) / double(t);
    } else {
        track.x_hat += (1.0 - config.beta) * (x - track.x_hat);
    }
    track.t_seen = t;
    return track;
}

/// Overload that checks the caller's step counter against the track.
inline IndicatorTrack ema_update(IndicatorTrack track, double x, const EmaConfig& config, std::size_t step) {
    if (step != track.t_seen + 1) {
        throw Error(ErrorCode::OutOfOrderUpdate, "update for step " + std::to_string(step) + " but track has seen " +
                                                     std::to_string(track.t_seen));
    }
    return ema_update(track, x, config);
}

/// The four modality indicators of every patch at one step.
struct SalienceReport {
    std::vector<std::array<double, kNumIndicators>> values;  // [patch][Indicator]
    std::vector<bool> degenerate_s1;
    std::vector<bool> degenerate_s2;

    std::size_t num_patches() const { return values.size(); }
    double at(std::size_t patch, Indicator id) const { return values[patch][static_cast<std::size_t>(id)]; }
    double& at(std::size_t patch, Indicator id) { return values[patch][static_cast<std::size_t>(id)]; }
};

/// Per-episode mutable state. Single writer.
struct PrunerState {
    std::size_t t_seen = 0;
    std::uint64_t seed = 0;
    std::vector<std::array<IndicatorTrack, kNumIndicators>> tracks;  // [patch][Indicator]

    PrunerState() = default;
    explicit PrunerState(std::uint64_t seed_) : seed(seed_) {}

    bool operator==(const PrunerState&) const = default;
};

/// Feeds one raw report through every (patch, indicator) track and returns
/// the smoothed report. With `smoothing` off the tracks still advance but
/// the raw values are returned and stored.
inline SalienceReport smooth_step(PrunerState& state, const SalienceReport& raw, const EmaConfig& config,
                                  bool smoothing = true) {
    config.validate();
    if (state.t_seen == 0 && state.tracks.empty()) {
        state.tracks.assign(raw.num_patches(), {});
    }
    if (raw.num_patches() != state.tracks.size()) {
        throw Error(ErrorCode::PatchCountChanged, "report has " + std::to_string(raw.num_patches()) +
                                                      " patches, state tracks " + std::to_string(state.tracks.size()));
    }
    SalienceReport out = raw;
    for (std::size_t p = 0; p < raw.num_patches(); ++p) {
        for (std::size_t i = 0; i < kNumIndicators; ++i) {
            auto& track = state.tracks[p][i];
            if (track.t_seen != state.t_seen) {
                throw Error(ErrorCode::OutOfOrderUpdate, "track out of step with pruner state");
            }
            if (smoothing) {
                track = ema_update(track, raw.values[p][i], config);
            } else {
                track = {raw.values[p][i], track.t_seen + 1};
            }
            out.values[p][i] = track.x_hat;
        }
    }
    ++state.t_seen;
    return out;
}

inline nlohmann::ordered_json state_to_json(const PrunerState& state) {
    nlohmann::ordered_json j;
    j["t_seen"] = state.t_seen;
    j["seed"] = state.seed;
    auto tracks = nlohmann::ordered_json::array();
    for (std::size_t p = 0; p < state.tracks.size(); ++p) {
        for (std::size_t i = 0; i < kNumIndicators; ++i) {
            nlohmann::ordered_json t;
            t["patch"] = p;
            t["id"] = to_string(Indicator(i));
            t["x_hat"] = state.tracks[p][i].x_hat;
            t["t_seen"] = state.tracks[p][i].t_seen;
            tracks.push_back(std::move(t));
        }
    }
    j["tracks"] = std::move(tracks);
    return j;
}

inline PrunerState state_from_json(const nlohmann::json& j) {
    try {
        PrunerState state(j.at("seed").get<std::uint64_t>());
        state.t_seen = j.at("t_seen").get<std::size_t>();
        const auto& tracks = j.at("tracks");
        std::size_t num_patches = 0;
        for (const auto& t : tracks) num_patches = std::max(num_patches, t.at("patch").get<std::size_t>() + 1);
        state.tracks.assign(num_patches, {});
        std::vector<std::array<bool, kNumIndicators>> seen(num_patches, std::array<bool, kNumIndicators>{});
        for (const auto& t : tracks) {
            const auto p = t.at("patch").get<std::size_t>();
            const auto id = static_cast<std::size_t>(parse_indicator(t.at("id").get<std::string>()));
            if (seen[p][id]) throw Error(ErrorCode::MalformedTrace, "duplicate track in checkpoint");
            seen[p][id] = true;
            state.tracks[p][id] = {t.at("x_hat").get<double>(), t.at("t_seen").get<std::size_t>()};
        }
        for (const auto& s : seen) {
            for (bool b : s) {
                if (!b) throw Error(ErrorCode::MalformedTrace, "checkpoint is missing a track");
            }
        }
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedTrace, std::string("bad checkpoint: ") + e.what());
    }
}

}  // namespace trimask
