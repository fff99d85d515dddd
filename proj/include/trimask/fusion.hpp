// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "trimask/candidate.hpp"
#include "trimask/error.hpp"
#include "trimask/rng.hpp"
#include "trimask/stage1.hpp"
#include "trimask/stage2.hpp"
#include "trimask/stage3.hpp"
#include "trimask/trace.hpp"

namespace trimask {

/// Everything the per-step pruning pipeline needs.
struct PrunerConfig {
    Stage1Thresholds thresholds;
    EmaConfig ema;
    Stage2Rules rules;
    double bg_keep_prob = 0.1;
    std::optional<double> budget;  // global target pruning rate over 2P tokens
    bool smoothing = true;         // false feeds raw indicators to the candidate rules
    std::uint64_t seed = 0;

    void validate() const {
        thresholds.validate();
        ema.validate();
        if (!(bg_keep_prob >= 0.0 && bg_keep_prob <= 1.0)) {
            throw Error(ErrorCode::InvalidConfig, "bg_keep_prob must lie in [0,1]");
        }
        if (!(rules.theta_2dext >= 0.0 && rules.theta_2dext <= 1.0) || !(rules.eps_3d >= 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "theta_2dext must lie in [0,1] and eps_3d must be >= 0");
        }
        if (budget && !(*budget >= 0.0 && *budget < 1.0)) {
            throw Error(ErrorCode::RateOutOfRange, "budget must lie in [0,1)");
        }
    }
};

struct RetentionMask {
    std::size_t step_index = 0;
    std::vector<std::uint8_t> mask2d;  // 1 = keep
    std::vector<std::uint8_t> mask3d;

    static RetentionMask all_ones(std::size_t step, std::size_t num_patches) {
        return {step, std::vector<std::uint8_t>(num_patches, 1), std::vector<std::uint8_t>(num_patches, 1)};
    }

    std::size_t num_patches() const { return mask2d.size(); }
    std::size_t retained2d() const { return std::size_t(std::ranges::count(mask2d, std::uint8_t{1})); }
    std::size_t retained3d() const { return std::size_t(std::ranges::count(mask3d, std::uint8_t{1})); }
    std::size_t retained() const { return retained2d() + retained3d(); }
    std::size_t pruned() const { return 2 * num_patches() - retained(); }

    bool operator==(const RetentionMask&) const = default;
};

struct StepStats {
    std::size_t step_index = 0;
    double pr2d = 0.0;
    double pr3d = 0.0;
    std::size_t retained_total = 0;
    std::size_t conflicts_resolved = 0;
    std::array<std::size_t, 3> semantic_counts{};  // indexed by SemanticLabel
    bool clustering_degenerate = false;
    std::size_t budget_dropped = 0;

    bool operator==(const StepStats&) const = default;
};

inline StepStats mask_stats(const RetentionMask& mask) {
    StepStats s;
    s.step_index = mask.step_index;
    const std::size_t p = mask.num_patches();
    s.retained_total = mask.retained();
    if (p > 0) {
        s.pr2d = 1.0 - double(mask.retained2d()) / double(p);
        s.pr3d = 1.0 - double(mask.retained3d()) / double(p);
    }
    return s;
}

/// Full per-step outcome, including the intermediate candidate sets.
struct StepOutcome {
    RetentionMask mask;
    StepStats stats;
    SalienceReport raw;
    SalienceReport smoothed;
    std::vector<CandidateSet> stage1;  // empty at the cold-start step
    std::vector<CandidateSet> stage2;
    std::vector<CandidateSet> final_set;
    std::vector<SemanticLabel> labels;
};

/// Raw indicators for one step.
inline SalienceReport measure_salience(const StepObservation& obs) {
    SalienceReport report;
    const std::size_t n = obs.num_patches();
    report.values.resize(n);
    report.degenerate_s1.resize(n);
    report.degenerate_s2.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        const auto s1 = stage1_salience(obs.patches[p]);
        const auto s2 = stage2_salience(obs.patches[p]);
        report.values[p] = {s1.m2d, s1.m3d, s2.m2d, s2.m3d};
        report.degenerate_s1[p] = s1.degenerate;
        report.degenerate_s2[p] = s2.degenerate;
    }
    return report;
}

/// Background keep draw for (seed, step, patch).
inline bool background_keep(std::uint64_t seed, std::size_t step, std::size_t patch, double keep_prob) {
    return counter_uniform(seed, step, patch) < keep_prob;
}

/// Intersection fusion. Patches whose semantic set is empty are dropped;
/// an empty intersection falls back to the semantic set.
inline std::pair<CandidateSet, bool> fuse_candidates(CandidateSet semantic, CandidateSet modality) {
    if (semantic.empty()) return {CandidateSet::none(), false};
    const CandidateSet both = semantic & modality;
    if (both.empty()) return {semantic, true};
    return {both, false};
}

/// Number of tokens a global rate r must prune out of n tokens: ceil(r n),
/// with a guard so products like 0.6 * 10 do not round up past the integer.
inline std::size_t budget_target(double rate, std::size_t num_tokens) {
    return std::size_t(std::ceil(rate * double(num_tokens) - 1e-9));
}

/// Drops retained tokens in ascending score order until ceil(r * 2P) are
/// pruned. Ties break by modality (2D first) then patch index. Never
/// re-adds a pruned token.
inline RetentionMask apply_budget(RetentionMask mask, std::span<const double> scores2d, std::span<const double> scores3d,
                                  double rate, std::size_t* dropped = nullptr) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::RateOutOfRange, "target rate must lie in [0,1)");
    const std::size_t p = mask.num_patches();
    if (scores2d.size() != p || scores3d.size() != p) {
        throw Error(ErrorCode::DimensionMismatch, "budget scores do not match the mask's patch count");
    }
    const std::size_t target = budget_target(rate, 2 * p);
    const std::size_t pruned = mask.pruned();
    if (dropped) *dropped = 0;
    if (pruned >= target) return mask;

    std::vector<std::tuple<double, int, std::size_t>> retained;
    for (std::size_t i = 0; i < p; ++i) {
        if (mask.mask2d[i]) retained.emplace_back(scores2d[i], 0, i);
        if (mask.mask3d[i]) retained.emplace_back(scores3d[i], 1, i);
    }
    std::ranges::sort(retained);
    const std::size_t need = target - pruned;
    for (std::size_t j = 0; j < need; ++j) {
        const auto [score, modality, patch] = retained[j];
        (modality == 0 ? mask.mask2d : mask.mask3d)[patch] = 0;
    }
    if (dropped) *dropped = need;
    return mask;
}

/// One step of the tri-stage pipeline: smoothing, modality candidates,
/// semantic candidates, fusion, masks. Step 1 always keeps every token but
/// still seeds the smoothing tracks.
inline StepOutcome prune_step(PrunerState& state, const StepObservation& obs, const PrunerConfig& config) {
    config.validate();
    if (obs.step_index != state.t_seen + 1) {
        throw Error(ErrorCode::StateMismatch, "observation is step " + std::to_string(obs.step_index) +
                                                  " but the pruner expects step " + std::to_string(state.t_seen + 1));
    }
    const std::size_t n = obs.num_patches();
    if (n > 0) {
        validate_step(obs, n, obs.patches[0].f2d.size(), obs.patches[0].a2d.size(),
                      "step " + std::to_string(obs.step_index));
    }

    StepOutcome out;
    out.raw = measure_salience(obs);
    out.smoothed = smooth_step(state, out.raw, config.ema, config.smoothing);
    const std::size_t t = obs.step_index;

    if (t == 1) {
        out.mask = RetentionMask::all_ones(t, n);
        out.stats = mask_stats(out.mask);
        return out;
    }

    out.stage1.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        out.stage1[p] = stage1_candidates(out.smoothed.at(p, Indicator::S1_3D), config.thresholds);
    }

    std::vector<double> scores(n);
    std::vector<Stage2Salience> s2(n);
    for (std::size_t p = 0; p < n; ++p) {
        scores[p] = comprehensive_score(obs.patches[p]);
        s2[p] = {out.raw.at(p, Indicator::S2_2D), out.raw.at(p, Indicator::S2_3D), 0.0, 0.0, out.raw.degenerate_s2[p]};
    }
    auto clustering = cluster_semantics(scores, state.seed);
    const auto baselines = compute_baselines(s2);
    out.labels = std::move(clustering.labels);

    out.stage2.resize(n);
    out.final_set.resize(n);
    out.mask = {t, std::vector<std::uint8_t>(n, 0), std::vector<std::uint8_t>(n, 0)};
    std::size_t conflicts = 0;
    for (std::size_t p = 0; p < n; ++p) {
        const bool keep = out.labels[p] == SemanticLabel::BG && background_keep(state.seed, t, p, config.bg_keep_prob);
        out.stage2[p] = stage2_candidates(out.labels[p], out.smoothed.at(p, Indicator::S2_2D),
                                          out.smoothed.at(p, Indicator::S2_3D), baselines, keep, config.rules);
        const auto [fused, conflict] = fuse_candidates(out.stage2[p], out.stage1[p]);
        out.final_set[p] = fused;
        conflicts += conflict ? 1 : 0;
        out.mask.mask2d[p] = fused.has2d ? 1 : 0;
        out.mask.mask3d[p] = fused.has3d ? 1 : 0;
    }

    std::size_t dropped = 0;
    if (config.budget) {
        std::vector<double> s2d(n), s3d(n);
        for (std::size_t p = 0; p < n; ++p) {
            s2d[p] = out.smoothed.at(p, Indicator::S1_2D);
            s3d[p] = out.smoothed.at(p, Indicator::S1_3D);
        }
        out.mask = apply_budget(std::move(out.mask), s2d, s3d, *config.budget, &dropped);
    }

    out.stats = mask_stats(out.mask);
    out.stats.conflicts_resolved = conflicts;
    out.stats.clustering_degenerate = clustering.degenerate;
    out.stats.budget_dropped = dropped;
    for (auto label : out.labels) ++out.stats.semantic_counts[static_cast<std::size_t>(label)];
    return out;
}

struct EpisodeResult {
    std::string episode_id;
    std::size_t num_patches = 0;
    std::vector<RetentionMask> masks;
    std::vector<StepStats> stats;
    PrunerState final_state;
};

inline EpisodeResult prune_episode(const EpisodeTrace& trace, const PrunerConfig& config) {
    config.validate();
    validate_trace(trace);
    EpisodeResult result;
    result.episode_id = trace.episode_id;
    result.num_patches = trace.num_patches;
    PrunerState state(config.seed);
    for (const auto& step : trace.steps) {
        auto outcome = prune_step(state, step, config);
        result.masks.push_back(std::move(outcome.mask));
        result.stats.push_back(outcome.stats);
    }
    result.final_state = std::move(state);
    return result;
}

/// Number of per-token keep/drop changes between consecutive steps.
inline std::size_t count_flips(std::span<const RetentionMask> masks) {
    std::size_t flips = 0;
    for (std::size_t t = 1; t < masks.size(); ++t) {
        for (std::size_t p = 0; p < masks[t].num_patches(); ++p) {
            flips += masks[t].mask2d[p] != masks[t - 1].mask2d[p];
            flips += masks[t].mask3d[p] != masks[t - 1].mask3d[p];
        }
    }
    return flips;
}

/// Flips per token per transition, in [0,1].
inline double flip_rate(std::span<const RetentionMask> masks) {
    if (masks.size() < 2 || masks[0].num_patches() == 0) return 0.0;
    return double(count_flips(masks)) / double(2 * masks[0].num_patches() * (masks.size() - 1));
}

}  // namespace trimask
