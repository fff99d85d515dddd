// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <future>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "trimask/config.hpp"
#include "trimask/error.hpp"
#include "trimask/format.hpp"
#include "trimask/fusion.hpp"
#include "trimask/report.hpp"

namespace trimask {

/// One-at-a-time hyperparameter grid: each axis varies alone while every
/// other field stays at the base configuration.
struct SweepGrid {
    std::vector<std::pair<std::string, std::vector<double>>> axes;

    std::size_t num_points() const {
        std::size_t n = 0;
        for (const auto& [name, values] : axes) n += values.size();
        return n;
    }
};

struct SweepRow {
    std::string param;
    double value = 0.0;
    EpisodeSummary summary;
};

inline bool is_sweepable(const std::string& name) {
    static const std::vector<std::string> names{"tau2d", "tau3d",  "beta",         "k",
                                                "theta_2dext", "eps_3d", "bg_keep_prob", "budget"};
    return std::ranges::find(names, name) != names.end();
}

/// Accepts {"grid": {param: [values...]}, "base": {...}} or a bare
/// {param: [values...]} object. Axis order follows the file.
inline std::pair<SweepGrid, nlohmann::json> parse_sweep_grid(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "grid spec must be a JSON object");
    SweepGrid grid;
    nlohmann::json base = nlohmann::json::object();
    const auto& axes = j.contains("grid") ? j["grid"] : j;
    if (j.contains("base")) base = nlohmann::json::parse(j["base"].dump());
    for (const auto& [name, values] : axes.items()) {
        if (&axes == &j && name == "base") continue;
        if (!is_sweepable(name)) throw Error(ErrorCode::InvalidConfig, "parameter '" + name + "' cannot be swept");
        if (!values.is_array()) throw Error(ErrorCode::InvalidConfig, "grid values for '" + name + "' must be a list");
        std::vector<double> v;
        for (const auto& x : values) {
            if (!x.is_number()) throw Error(ErrorCode::InvalidConfig, "grid values for '" + name + "' must be numbers");
            v.push_back(x.get<double>());
        }
        if (!v.empty()) grid.axes.emplace_back(name, std::move(v));
    }
    return {grid, base};
}

inline RunConfig with_param(RunConfig cfg, const std::string& name, double value) {
    nlohmann::json j;
    if (name == "k") {
        if (value < 0.0 || value != std::floor(value)) throw Error(ErrorCode::InvalidConfig, "k must be an integer");
        j[name] = static_cast<std::size_t>(value);
    } else {
        j[name] = value;
    }
    merge_config(cfg, j);
    cfg.validate();
    return cfg;
}

/// Evaluates every grid point on the trace. Points run on a worker pool;
/// rows come back in grid order regardless of completion order.
inline std::vector<SweepRow> run_sweep(const EpisodeTrace& trace, const RunConfig& base, const SweepGrid& grid,
                                       std::size_t workers = 0) {
    std::vector<std::pair<std::string, double>> points;
    for (const auto& [name, values] : grid.axes) {
        for (double v : values) points.emplace_back(name, v);
    }
    if (points.empty()) throw Error(ErrorCode::InvalidConfig, "sweep grid is empty");
    // Reject bad points before spending time on any of them.
    std::vector<RunConfig> configs;
    for (const auto& [name, value] : points) configs.push_back(with_param(base, name, value));

    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepRow> rows(points.size());
    for (std::size_t start = 0; start < points.size(); start += workers) {
        const std::size_t stop = std::min(points.size(), start + workers);
        std::vector<std::future<EpisodeSummary>> batch;
        for (std::size_t i = start; i < stop; ++i) {
            batch.push_back(std::async(std::launch::async, [&trace, &cfg = configs[i]] {
                return summarize(prune_episode(trace, cfg.pruner), cfg.cost);
            }));
        }
        for (std::size_t i = start; i < stop; ++i) {
            rows[i] = {points[i].first, points[i].second, batch[i - start].get()};
        }
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "param,value,mean_pr2d,mean_pr3d,mean_retained,predicted_speedup,flip_rate,conflicts\n";
    for (const auto& r : rows) {
        out << r.param << ',' << fmt::number(r.value) << ',' << fmt::number(r.summary.mean_pr2d) << ','
            << fmt::number(r.summary.mean_pr3d) << ',' << fmt::number(r.summary.mean_retained) << ','
            << fmt::number(r.summary.predicted_speedup) << ',' << fmt::number(r.summary.flip_rate) << ','
            << r.summary.total_conflicts << '\n';
    }
}

}  // namespace trimask
