// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "trimask/error.hpp"
#include "trimask/fusion.hpp"
#include "trimask/simulator.hpp"

namespace trimask {

/// Pruner settings plus the cost model used for reporting.
struct RunConfig {
    PrunerConfig pruner;
    CostModel cost;

    void validate() const {
        pruner.validate();
        cost.validate();
    }
};

/// Reads fields present in `j` over the current values of `cfg`. Missing
/// fields keep their value, so a file can hold a partial override.
inline void merge_config(RunConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    auto& p = cfg.pruner;
    try {
        p.thresholds.tau2d = j.value("tau2d", p.thresholds.tau2d);
        p.thresholds.tau3d = j.value("tau3d", p.thresholds.tau3d);
        p.ema.beta = j.value("beta", p.ema.beta);
        p.ema.k = j.value("k", p.ema.k);
        p.rules.theta_2dext = j.value("theta_2dext", p.rules.theta_2dext);
        p.rules.eps_3d = j.value("eps_3d", p.rules.eps_3d);
        p.bg_keep_prob = j.value("bg_keep_prob", p.bg_keep_prob);
        p.smoothing = j.value("smoothing", p.smoothing);
        p.seed = j.value("seed", p.seed);
        if (j.contains("budget")) {
            if (j["budget"].is_null()) p.budget.reset();
            else p.budget = j["budget"].get<double>();
        }
        if (j.contains("cost")) {
            const auto& c = j["cost"];
            cfg.cost.c_fix = c.value("c_fix", cfg.cost.c_fix);
            cfg.cost.c_lin = c.value("c_lin", cfg.cost.c_lin);
            cfg.cost.c_attn = c.value("c_attn", cfg.cost.c_attn);
            cfg.cost.c_method = c.value("c_method", cfg.cost.c_method);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    merge_config(cfg, j);
    cfg.validate();
    return cfg;
}

inline RunConfig config_from_string(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json read_json_file(const std::string& path, ErrorCode parse_error) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(parse_error, path + ": " + e.what());
    }
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    const auto& p = cfg.pruner;
    nlohmann::ordered_json j;
    j["tau2d"] = p.thresholds.tau2d;
    j["tau3d"] = p.thresholds.tau3d;
    j["beta"] = p.ema.beta;
    j["k"] = p.ema.k;
    j["theta_2dext"] = p.rules.theta_2dext;
    j["eps_3d"] = p.rules.eps_3d;
    j["bg_keep_prob"] = p.bg_keep_prob;
    j["smoothing"] = p.smoothing;
    j["seed"] = p.seed;
    j["budget"] = p.budget ? nlohmann::ordered_json(*p.budget) : nlohmann::ordered_json(nullptr);
    j["cost"] = {{"c_fix", cfg.cost.c_fix},
                 {"c_lin", cfg.cost.c_lin},
                 {"c_attn", cfg.cost.c_attn},
                 {"c_method", cfg.cost.c_method}};
    return j;
}

/// Seed from TRIMASK_SEED, if set and numeric.
inline std::optional<std::uint64_t> seed_from_env() {
    const char* v = std::getenv("TRIMASK_SEED");
    if (!v || !*v) return std::nullopt;
    char* end = nullptr;
    const auto seed = std::strtoull(v, &end, 10);
    if (*end != '\0') throw Error(ErrorCode::InvalidConfig, "TRIMASK_SEED is not an unsigned integer");
    return seed;
}

}  // namespace trimask
