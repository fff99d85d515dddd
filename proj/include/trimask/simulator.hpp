// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trimask/error.hpp"
#include "trimask/fusion.hpp"
#include "trimask/stage2.hpp"
#include "trimask/trace.hpp"

namespace trimask {

/// Modality profile planted into every patch of one semantic region.
struct RegionProfile {
    double m_s1_3d = 0.15;    // feature-norm share of the point-cloud token
    double ortho_frac = 0.5;  // L1 share of a3d orthogonal to a2d
    double share_3d = 0.4;    // L1 share of the comprehensive attention carried by a3d
};

enum class DriftKind { None, Linear, Sine };

/// Per-step multiplicative modulation of region levels and profiles.
/// Linear ramps from 1 to 1+amplitude over the episode; Sine oscillates
/// around 1 with a per-region phase offset of 2*pi*region/3.
struct DriftSpec {
    DriftKind kind = DriftKind::None;
    double amplitude = 0.0;
    double period = 10.0;  // steps, Sine only

    double factor(std::size_t region, std::size_t step, std::size_t num_steps) const {
        switch (kind) {
            case DriftKind::None: return 1.0;
            case DriftKind::Linear:
                return 1.0 + amplitude * double(step - 1) / double(std::max<std::size_t>(num_steps - 1, 1));
            case DriftKind::Sine: {
                const double phase = 2.0 * std::numbers::pi * double(region) / 3.0;
                return 1.0 + amplitude * std::sin(2.0 * std::numbers::pi * double(step - 1) / period + phase);
            }
        }
        return 1.0;
    }
};

/// Synthetic episode description. Arrays are indexed by SemanticLabel
/// (OBJ, ROB, BG).
struct ScenarioSpec {
    std::string episode_id = "synthetic";
    std::size_t num_patches = 256;
    std::size_t steps = 20;
    std::size_t feat_dim = 32;
    std::size_t attn_dim = 16;
    std::array<double, 3> fractions{0.25, 0.25, 0.5};
    std::array<double, 3> levels{10.0, 1.0, 0.1};
    std::array<RegionProfile, 3> profiles{RegionProfile{0.15, 0.5, 0.45}, RegionProfile{0.12, 0.4, 0.35},
                                          RegionProfile{0.05, 0.3, 0.3}};
    DriftSpec drift;
    double noise_sigma = 0.0;       // Gaussian noise on comprehensive attention scores
    double indicator_jitter = 0.0;  // Gaussian noise on planted per-step profile values
    std::uint64_t seed = 0;

    void validate() const {
        auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
        const double total = fractions[0] + fractions[1] + fractions[2];
        if (std::abs(total - 1.0) > 1e-9) bad("region fractions must sum to 1");
        for (double f : fractions) {
            if (!(f >= 0.0)) bad("region fractions must be nonnegative");
        }
        if (!(levels[0] > levels[1] && levels[1] > levels[2] && levels[2] > 0.0)) {
            bad("attention levels must satisfy obj > rob > bg > 0");
        }
        if (!(noise_sigma >= 0.0) || !(indicator_jitter >= 0.0)) bad("noise levels must be >= 0");
        if (feat_dim == 0) bad("feat_dim must be >= 1");
        if (attn_dim < 2) bad("attn_dim must be >= 2");
        for (const auto& p : profiles) {
            if (!(p.m_s1_3d >= 0.0 && p.m_s1_3d <= 1.0)) bad("m_s1_3d must lie in [0,1]");
            if (!(p.ortho_frac >= 0.0 && p.ortho_frac <= 1.0)) bad("ortho_frac must lie in [0,1]");
            if (!(p.share_3d >= 0.0 && p.share_3d < 1.0)) bad("share_3d must lie in [0,1)");
        }
        if (!(drift.amplitude >= 0.0 && drift.amplitude < 1.0)) bad("drift amplitude must lie in [0,1)");
        if (drift.kind == DriftKind::Sine && !(drift.period > 0.0)) bad("drift period must be > 0");
    }
};

/// What the generator planted. Per-step arrays are [step][patch].
struct GroundTruth {
    std::vector<SemanticLabel> labels;
    std::vector<std::vector<double>> m_s1_3d;
    std::vector<std::vector<double>> ortho_frac;
    std::vector<std::vector<double>> share_3d;

    double m_s2_2d(std::size_t step, std::size_t patch) const { return 1.0 - share_3d[step][patch]; }
    double m_s2_3d(std::size_t step, std::size_t patch) const {
        return share_3d[step][patch] * ortho_frac[step][patch];
    }
};

struct SyntheticEpisode {
    EpisodeTrace trace;
    GroundTruth truth;
};

namespace detail {

inline std::vector<double> positive_weights(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        x = u(rng);
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

}  // namespace detail

/// Builds a trace whose indicators realize the planted values exactly
/// (up to rounding). Attention rows put a2d on the first half of the
/// dimensions and the orthogonal part of a3d on the second half, so the
/// L1 norms of the projection components are known in closed form.
inline SyntheticEpisode generate_episode(const ScenarioSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    const std::size_t n = spec.num_patches;

    SyntheticEpisode ep;
    auto& trace = ep.trace;
    auto& truth = ep.truth;
    trace.episode_id = spec.episode_id;
    trace.num_patches = n;
    trace.feat_dim = spec.feat_dim;
    trace.attn_dim = spec.attn_dim;

    const auto n_obj = std::size_t(std::llround(spec.fractions[0] * double(n)));
    const auto n_rob = std::min(n - std::min(n, n_obj), std::size_t(std::llround(spec.fractions[1] * double(n))));
    truth.labels.assign(n, SemanticLabel::BG);
    std::fill_n(truth.labels.begin(), std::min(n, n_obj), SemanticLabel::OBJ);
    std::fill_n(truth.labels.begin() + std::ptrdiff_t(std::min(n, n_obj)), n_rob, SemanticLabel::ROB);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(truth.labels[i - 1], truth.labels[rng() % i]);
    }

    const std::size_t half = spec.attn_dim / 2;
    const std::size_t rest = spec.attn_dim - half;
    auto clamp01 = [](double x) { return std::clamp(x, 0.0, 1.0); };

    for (std::size_t t = 1; t <= spec.steps; ++t) {
        StepObservation step;
        step.step_index = t;
        step.patches.resize(n);
        auto& m1_row = truth.m_s1_3d.emplace_back(n);
        auto& of_row = truth.ortho_frac.emplace_back(n);
        auto& sh_row = truth.share_3d.emplace_back(n);
        for (std::size_t p = 0; p < n; ++p) {
            const auto region = static_cast<std::size_t>(truth.labels[p]);
            const auto& prof = spec.profiles[region];
            const double drift = spec.drift.factor(region, t, spec.steps);

            const double score = std::max(spec.levels[region] * drift + spec.noise_sigma * normal(rng), 1e-9);
            const double m1 = clamp01(prof.m_s1_3d * drift + spec.indicator_jitter * normal(rng));
            const double of = clamp01(prof.ortho_frac * drift + spec.indicator_jitter * normal(rng));
            const double sh = prof.share_3d;
            m1_row[p] = m1;
            of_row[p] = of;
            sh_row[p] = sh;

            auto& obs = step.patches[p];
            obs.patch_id = p;

            const double feat_total = scale(rng);
            const auto w2 = detail::positive_weights(rng, spec.feat_dim);
            const auto w3 = detail::positive_weights(rng, spec.feat_dim);
            obs.f2d.resize(spec.feat_dim);
            obs.f3d.resize(spec.feat_dim);
            for (std::size_t i = 0; i < spec.feat_dim; ++i) {
                const double s2 = (rng() & 1) ? 1.0 : -1.0;
                const double s3 = (rng() & 1) ? 1.0 : -1.0;
                obs.f2d[i] = s2 * feat_total * (1.0 - m1) * w2[i];
                obs.f3d[i] = s3 * feat_total * m1 * w3[i];
            }

            const auto wa = detail::positive_weights(rng, half);
            const auto wo = detail::positive_weights(rng, rest);
            obs.a2d.assign(spec.attn_dim, 0.0);
            obs.a3d.assign(spec.attn_dim, 0.0);
            const double norm2d = score * (1.0 - sh);
            const double coeff = sh * (1.0 - of) / (1.0 - sh);  // a3d parallel part = coeff * a2d
            for (std::size_t i = 0; i < half; ++i) {
                obs.a2d[i] = norm2d * wa[i];
                obs.a3d[i] = coeff * obs.a2d[i];
            }
            for (std::size_t i = 0; i < rest; ++i) {
                obs.a3d[half + i] = score * sh * of * wo[i];
            }
        }
        trace.steps.push_back(std::move(step));
    }
    return ep;
}

inline std::string to_string(DriftKind kind) {
    switch (kind) {
        case DriftKind::None: return "none";
        case DriftKind::Linear: return "linear";
        case DriftKind::Sine: return "sine";
    }
    return "none";
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
    ScenarioSpec s;
    try {
        if (!j.is_object()) throw Error(ErrorCode::InvalidSpec, "scenario must be a JSON object");
        s.episode_id = j.value("episode_id", s.episode_id);
        s.num_patches = j.value("num_patches", s.num_patches);
        s.steps = j.value("steps", s.steps);
        s.feat_dim = j.value("feat_dim", s.feat_dim);
        s.attn_dim = j.value("attn_dim", s.attn_dim);
        s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
        s.indicator_jitter = j.value("indicator_jitter", s.indicator_jitter);
        s.seed = j.value("seed", s.seed);
        static constexpr std::array<const char*, 3> regions{"obj", "rob", "bg"};
        for (std::size_t r = 0; r < 3; ++r) {
            if (j.contains("fractions")) s.fractions[r] = j["fractions"].value(regions[r], s.fractions[r]);
            if (j.contains("levels")) s.levels[r] = j["levels"].value(regions[r], s.levels[r]);
            if (j.contains("profiles") && j["profiles"].contains(regions[r])) {
                const auto& pj = j["profiles"][regions[r]];
                auto& p = s.profiles[r];
                p.m_s1_3d = pj.value("m_s1_3d", p.m_s1_3d);
                p.ortho_frac = pj.value("ortho_frac", p.ortho_frac);
                p.share_3d = pj.value("share_3d", p.share_3d);
            }
        }
        if (j.contains("drift")) {
            const auto& d = j["drift"];
            const auto kind = d.value("kind", std::string("none"));
            if (kind == "none") s.drift.kind = DriftKind::None;
            else if (kind == "linear") s.drift.kind = DriftKind::Linear;
            else if (kind == "sine") s.drift.kind = DriftKind::Sine;
            else throw Error(ErrorCode::InvalidSpec, "unknown drift kind '" + kind + "'");
            s.drift.amplitude = d.value("amplitude", s.drift.amplitude);
            s.drift.period = d.value("period", s.drift.period);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
    s.validate();
    return s;
}

inline nlohmann::ordered_json scenario_to_json(const ScenarioSpec& s) {
    nlohmann::ordered_json j;
    j["episode_id"] = s.episode_id;
    j["num_patches"] = s.num_patches;
    j["steps"] = s.steps;
    j["feat_dim"] = s.feat_dim;
    j["attn_dim"] = s.attn_dim;
    static constexpr std::array<const char*, 3> regions{"obj", "rob", "bg"};
    for (std::size_t r = 0; r < 3; ++r) {
        j["fractions"][regions[r]] = s.fractions[r];
        j["levels"][regions[r]] = s.levels[r];
        j["profiles"][regions[r]] = {{"m_s1_3d", s.profiles[r].m_s1_3d},
                                     {"ortho_frac", s.profiles[r].ortho_frac},
                                     {"share_3d", s.profiles[r].share_3d}};
    }
    j["drift"] = {{"kind", to_string(s.drift.kind)}, {"amplitude", s.drift.amplitude}, {"period", s.drift.period}};
    j["noise_sigma"] = s.noise_sigma;
    j["indicator_jitter"] = s.indicator_jitter;
    j["seed"] = s.seed;
    return j;
}

inline nlohmann::ordered_json truth_to_json(const GroundTruth& truth) {
    nlohmann::ordered_json j;
    auto labels = nlohmann::ordered_json::array();
    for (auto l : truth.labels) labels.push_back(std::string(to_string(l)));
    j["labels"] = std::move(labels);
    j["planted"]["m_s1_3d"] = truth.m_s1_3d;
    j["planted"]["ortho_frac"] = truth.ortho_frac;
    j["planted"]["share_3d"] = truth.share_3d;
    return j;
}

inline GroundTruth truth_from_json(const nlohmann::json& j) {
    GroundTruth truth;
    try {
        for (const auto& l : j.at("labels")) truth.labels.push_back(parse_label(l.get<std::string>()));
        const auto& planted = j.at("planted");
        truth.m_s1_3d = planted.at("m_s1_3d").get<std::vector<std::vector<double>>>();
        truth.ortho_frac = planted.at("ortho_frac").get<std::vector<std::vector<double>>>();
        truth.share_3d = planted.value("share_3d", std::vector<std::vector<double>>{});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedTrace, std::string("bad ground truth: ") + e.what());
    }
    return truth;
}

/// Per-step transformer cost as a function of visual token count n:
/// c_fix + c_lin n + c_attn n^2, plus c_method charged on every pruned step.
/// Defaults put a full 512-token step at 2.5 units with attention dominant.
struct CostModel {
    double c_fix = 0.1;
    double c_lin = 0.4 / 512.0;
    double c_attn = 2.0 / (512.0 * 512.0);
    double c_method = 0.061;

    void validate() const {
        for (double c : {c_fix, c_lin, c_attn, c_method}) {
            if (!(std::isfinite(c) && c >= 0.0)) {
                throw Error(ErrorCode::InvalidConfig, "cost coefficients must be finite and >= 0");
            }
        }
    }

    double cost(double tokens) const { return c_fix + c_lin * tokens + c_attn * tokens * tokens; }
};

/// Unpruned cost over pruned cost, summed over steps.
inline double predict_speedup(std::span<const RetentionMask> masks, const CostModel& model,
                              std::size_t baseline_tokens) {
    model.validate();
    if (masks.empty()) return 1.0;
    double full = 0.0;
    double pruned = 0.0;
    for (const auto& m : masks) {
        full += model.cost(double(baseline_tokens));
        pruned += model.cost(double(m.retained())) + model.c_method;
    }
    return pruned > 0.0 ? full / pruned : 1.0;
}

}  // namespace trimask
