// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "trimask/error.hpp"
#include "trimask/format.hpp"

namespace trimask {

inline constexpr const char* kTraceFormat = "trimask-trace/1";

/// One patch at one step: final-layer features and attention rows for the
/// image token and the point-cloud token sharing this patch index.
struct PatchObservation {
    std::size_t patch_id = 0;
    std::vector<double> f2d;
    std::vector<double> f3d;
    std::vector<double> a2d;
    std::vector<double> a3d;

    bool operator==(const PatchObservation&) const = default;
};

struct StepObservation {
    std::size_t step_index = 1;  // 1-based
    std::vector<PatchObservation> patches;

    std::size_t num_patches() const { return patches.size(); }
    bool operator==(const StepObservation&) const = default;
};

struct EpisodeTrace {
    std::string episode_id;
    std::size_t num_patches = 256;
    std::size_t feat_dim = 32;
    std::size_t attn_dim = 16;
    std::vector<StepObservation> steps;

    bool operator==(const EpisodeTrace&) const = default;
};

namespace detail {

inline std::string where(std::size_t line, std::size_t step) {
    return "line " + std::to_string(line) + " (step " + std::to_string(step) + ")";
}

inline void check_finite(std::span<const double> v, const char* field, const std::string& loc) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw Error(ErrorCode::NonFiniteValue, loc + ": non-finite entry in " + field);
        }
    }
}

}  // namespace detail

/// Checks the per-patch invariants. `loc` is prepended to diagnostics.
inline void validate_patch(const PatchObservation& p, std::size_t feat_dim, std::size_t attn_dim,
                           const std::string& loc = "patch") {
    const std::string at = loc + " patch " + std::to_string(p.patch_id);
    if (p.f2d.size() != feat_dim || p.f3d.size() != feat_dim) {
        throw Error(ErrorCode::DimensionMismatch, at + ": feature length " + std::to_string(p.f2d.size()) + "/" +
                                                      std::to_string(p.f3d.size()) + ", expected " +
                                                      std::to_string(feat_dim));
    }
    if (p.a2d.size() != attn_dim || p.a3d.size() != attn_dim) {
        throw Error(ErrorCode::DimensionMismatch, at + ": attention length " + std::to_string(p.a2d.size()) + "/" +
                                                      std::to_string(p.a3d.size()) + ", expected " +
                                                      std::to_string(attn_dim));
    }
    detail::check_finite(p.f2d, "f2d", at);
    detail::check_finite(p.f3d, "f3d", at);
    detail::check_finite(p.a2d, "a2d", at);
    detail::check_finite(p.a3d, "a3d", at);
    auto negative = [](double x) { return x < 0.0; };
    if (std::ranges::any_of(p.a2d, negative) || std::ranges::any_of(p.a3d, negative)) {
        throw Error(ErrorCode::MalformedTrace, at + ": negative attention score");
    }
}

/// Checks a step against the episode geometry. Patches must be ordered by id.
inline void validate_step(const StepObservation& step, std::size_t num_patches, std::size_t feat_dim,
                          std::size_t attn_dim, const std::string& loc) {
    if (step.patches.size() != num_patches) {
        throw Error(ErrorCode::DimensionMismatch, loc + ": " + std::to_string(step.patches.size()) +
                                                      " patches, expected " + std::to_string(num_patches));
    }
    for (std::size_t i = 0; i < step.patches.size(); ++i) {
        if (step.patches[i].patch_id != i) {
            throw Error(ErrorCode::MalformedTrace, loc + ": patch ids must be exactly 0.." +
                                                       std::to_string(num_patches) + "-1");
        }
        validate_patch(step.patches[i], feat_dim, attn_dim, loc);
    }
}

inline void validate_trace(const EpisodeTrace& trace) {
    if (trace.feat_dim == 0 || trace.attn_dim == 0) {
        throw Error(ErrorCode::MalformedTrace, "feat_dim and attn_dim must be nonzero");
    }
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const auto& step = trace.steps[s];
        if (step.step_index != s + 1) {
            throw Error(ErrorCode::NonConsecutiveSteps, "step " + std::to_string(s + 1) + " carries t=" +
                                                            std::to_string(step.step_index));
        }
        validate_step(step, trace.num_patches, trace.feat_dim, trace.attn_dim, "step " + std::to_string(s + 1));
    }
}

namespace detail {

inline std::vector<double> read_vector(const nlohmann::json& obj, const char* key, const std::string& loc) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        throw Error(ErrorCode::MalformedTrace, loc + ": missing array '" + key + "'");
    }
    std::vector<double> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number()) throw Error(ErrorCode::MalformedTrace, loc + ": non-numeric entry in '" + key + "'");
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::size_t read_count(const nlohmann::json& obj, const char* key, const std::string& loc) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_integer() || it->get<long long>() < 0) {
        throw Error(ErrorCode::MalformedTrace, loc + ": missing or invalid integer '" + key + "'");
    }
    return it->get<std::size_t>();
}

inline nlohmann::json parse_line(const std::string& line, const std::string& loc) {
    try {
        auto j = nlohmann::json::parse(line);
        if (!j.is_object()) throw Error(ErrorCode::MalformedTrace, loc + ": expected a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedTrace, loc + ": " + e.what());
    }
}

}  // namespace detail

/// Parses and fully validates a JSONL trace. Patches within a step may
/// appear in any order; they are stored sorted by id.
inline EpisodeTrace parse_trace(std::istream& in) {
    EpisodeTrace trace;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string loc = "line " + std::to_string(line_no);
        auto j = detail::parse_line(line, loc);
        if (!have_header) {
            if (!j.contains("format") || j["format"] != kTraceFormat) {
                throw Error(ErrorCode::MalformedTrace, loc + ": expected header with format " + kTraceFormat);
            }
            if (!j.contains("episode_id") || !j["episode_id"].is_string()) {
                throw Error(ErrorCode::MalformedTrace, loc + ": header needs string 'episode_id'");
            }
            trace.episode_id = j["episode_id"].get<std::string>();
            trace.num_patches = detail::read_count(j, "num_patches", loc);
            trace.feat_dim = detail::read_count(j, "feat_dim", loc);
            trace.attn_dim = detail::read_count(j, "attn_dim", loc);
            if (trace.feat_dim == 0 || trace.attn_dim == 0) {
                throw Error(ErrorCode::MalformedTrace, loc + ": feat_dim and attn_dim must be nonzero");
            }
            have_header = true;
            continue;
        }
        StepObservation step;
        step.step_index = detail::read_count(j, "t", loc);
        const std::size_t expected_t = trace.steps.size() + 1;
        const std::string sloc = detail::where(line_no, step.step_index);
        if (step.step_index != expected_t) {
            throw Error(ErrorCode::NonConsecutiveSteps,
                        sloc + ": expected t=" + std::to_string(expected_t));
        }
        auto pit = j.find("patches");
        if (pit == j.end() || !pit->is_array()) {
            throw Error(ErrorCode::MalformedTrace, sloc + ": missing 'patches' array");
        }
        if (pit->size() != trace.num_patches) {
            throw Error(ErrorCode::DimensionMismatch, sloc + ": " + std::to_string(pit->size()) +
                                                          " patches, expected " + std::to_string(trace.num_patches));
        }
        step.patches.resize(trace.num_patches);
        std::vector<bool> seen(trace.num_patches, false);
        for (const auto& pj : *pit) {
            if (!pj.is_object()) throw Error(ErrorCode::MalformedTrace, sloc + ": patch must be an object");
            const std::size_t id = detail::read_count(pj, "id", sloc);
            if (id >= trace.num_patches || seen[id]) {
                throw Error(ErrorCode::MalformedTrace, sloc + ": patch id " + std::to_string(id) +
                                                           " out of range or duplicated");
            }
            seen[id] = true;
            auto& p = step.patches[id];
            p.patch_id = id;
            p.f2d = detail::read_vector(pj, "f2d", sloc);
            p.f3d = detail::read_vector(pj, "f3d", sloc);
            p.a2d = detail::read_vector(pj, "a2d", sloc);
            p.a3d = detail::read_vector(pj, "a3d", sloc);
            validate_patch(p, trace.feat_dim, trace.attn_dim, sloc);
        }
        trace.steps.push_back(std::move(step));
    }
    if (!have_header) throw Error(ErrorCode::MalformedTrace, "missing header line");
    return trace;
}

inline EpisodeTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    return parse_trace(in);
}

inline void write_trace(std::ostream& out, const EpisodeTrace& trace) {
    validate_trace(trace);
    nlohmann::ordered_json header;
    header["format"] = kTraceFormat;
    header["episode_id"] = trace.episode_id;
    header["num_patches"] = trace.num_patches;
    header["feat_dim"] = trace.feat_dim;
    header["attn_dim"] = trace.attn_dim;
    out << header.dump() << '\n';
    std::string line;
    for (const auto& step : trace.steps) {
        line.clear();
        line += "{\"t\":" + std::to_string(step.step_index) + ",\"patches\":[";
        for (std::size_t i = 0; i < step.patches.size(); ++i) {
            const auto& p = step.patches[i];
            if (i != 0) line.push_back(',');
            line += "{\"id\":" + std::to_string(p.patch_id) + ",\"f2d\":";
            fmt::append_array(line, p.f2d);
            line += ",\"f3d\":";
            fmt::append_array(line, p.f3d);
            line += ",\"a2d\":";
            fmt::append_array(line, p.a2d);
            line += ",\"a3d\":";
            fmt::append_array(line, p.a3d);
            line.push_back('}');
        }
        line += "]}\n";
        out << line;
    }
}

/// Validates before touching the file, so an invalid trace never leaves a partial write.
inline void save_trace(const EpisodeTrace& trace, const std::string& path) {
    validate_trace(trace);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    write_trace(out, trace);
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

}  // namespace trimask
