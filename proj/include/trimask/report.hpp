// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trimask/format.hpp"
#include "trimask/fusion.hpp"
#include "trimask/simulator.hpp"

namespace trimask {

/// Episode-level aggregates of a mask sequence.
struct EpisodeSummary {
    std::string episode_id;
    std::size_t num_patches = 0;
    std::size_t steps = 0;
    double mean_pr2d = 0.0;
    double mean_pr3d = 0.0;
    double mean_pr_overall = 0.0;         // all steps, including the unpruned first step
    double mean_pr_overall_active = 0.0;  // steps t >= 2
    double mean_retained = 0.0;
    std::size_t total_conflicts = 0;
    double flip_rate = 0.0;
    double predicted_speedup = 1.0;
};

inline EpisodeSummary summarize(const std::string& episode_id, std::size_t num_patches,
                                std::span<const RetentionMask> masks, std::span<const std::size_t> conflicts,
                                const CostModel& cost) {
    EpisodeSummary s;
    s.episode_id = episode_id;
    s.num_patches = num_patches;
    s.steps = masks.size();
    if (masks.empty() || num_patches == 0) return s;
    const double p = double(num_patches);
    double active = 0.0;
    for (std::size_t t = 0; t < masks.size(); ++t) {
        const auto& m = masks[t];
        s.mean_pr2d += 1.0 - double(m.retained2d()) / p;
        s.mean_pr3d += 1.0 - double(m.retained3d()) / p;
        const double overall = double(m.pruned()) / (2.0 * p);
        s.mean_pr_overall += overall;
        if (t > 0) active += overall;
        s.mean_retained += double(m.retained());
    }
    const double steps = double(masks.size());
    s.mean_pr2d /= steps;
    s.mean_pr3d /= steps;
    s.mean_pr_overall /= steps;
    s.mean_retained /= steps;
    s.mean_pr_overall_active = masks.size() > 1 ? active / (steps - 1.0) : 0.0;
    for (auto c : conflicts) s.total_conflicts += c;
    s.flip_rate = flip_rate(masks);
    s.predicted_speedup = predict_speedup(masks, cost, 2 * num_patches);
    return s;
}

inline EpisodeSummary summarize(const EpisodeResult& result, const CostModel& cost) {
    std::vector<std::size_t> conflicts;
    for (const auto& s : result.stats) conflicts.push_back(s.conflicts_resolved);
    return summarize(result.episode_id, result.num_patches, result.masks, conflicts, cost);
}

inline std::string summary_to_json(const EpisodeSummary& s) {
    // Hand-assembled so doubles use the shortest round-trip form.
    std::string out = "{\n";
    auto field = [&](const char* key, const std::string& value, bool last = false) {
        out += "  \"";
        out += key;
        out += "\": " + value + (last ? "\n" : ",\n");
    };
    field("episode_id", nlohmann::json(s.episode_id).dump());
    field("num_patches", std::to_string(s.num_patches));
    field("steps", std::to_string(s.steps));
    field("mean_pr2d", fmt::number(s.mean_pr2d));
    field("mean_pr3d", fmt::number(s.mean_pr3d));
    field("mean_pr_overall", fmt::number(s.mean_pr_overall));
    field("mean_pr_overall_active", fmt::number(s.mean_pr_overall_active));
    field("mean_retained", fmt::number(s.mean_retained));
    field("total_conflicts", std::to_string(s.total_conflicts));
    field("flip_rate", fmt::number(s.flip_rate));
    field("predicted_speedup", fmt::number(s.predicted_speedup), true);
    out += "}\n";
    return out;
}

inline void write_stats_csv(std::ostream& out, std::span<const StepStats> stats) {
    out << "t,pr2d,pr3d,retained,conflicts,n_obj,n_rob,n_bg\n";
    for (const auto& s : stats) {
        out << s.step_index << ',' << fmt::number(s.pr2d) << ',' << fmt::number(s.pr3d) << ',' << s.retained_total
            << ',' << s.conflicts_resolved << ',' << s.semantic_counts[0] << ',' << s.semantic_counts[1] << ','
            << s.semantic_counts[2] << '\n';
    }
}

}  // namespace trimask
