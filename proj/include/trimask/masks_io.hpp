// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "trimask/error.hpp"
#include "trimask/format.hpp"
#include "trimask/fusion.hpp"

namespace trimask {

inline constexpr const char* kMasksFormat = "trimask-masks/1";

struct MaskRecord {
    RetentionMask mask;
    double pr2d = 0.0;
    double pr3d = 0.0;
    std::size_t conflicts = 0;
};

struct MaskFile {
    std::string episode_id;
    std::size_t num_patches = 0;
    std::vector<MaskRecord> records;

    std::vector<RetentionMask> masks() const {
        std::vector<RetentionMask> out;
        out.reserve(records.size());
        for (const auto& r : records) out.push_back(r.mask);
        return out;
    }
};

inline void write_masks(std::ostream& out, const EpisodeResult& result) {
    nlohmann::ordered_json header;
    header["format"] = kMasksFormat;
    header["episode_id"] = result.episode_id;
    header["num_patches"] = result.num_patches;
    out << header.dump() << '\n';
    std::string line;
    for (std::size_t i = 0; i < result.masks.size(); ++i) {
        const auto& m = result.masks[i];
        const auto& s = result.stats[i];
        line = "{\"t\":" + std::to_string(m.step_index) + ",\"mask2d\":";
        fmt::append_int_array<std::uint8_t>(line, m.mask2d);
        line += ",\"mask3d\":";
        fmt::append_int_array<std::uint8_t>(line, m.mask3d);
        line += ",\"pr2d\":";
        fmt::append_number(line, s.pr2d);
        line += ",\"pr3d\":";
        fmt::append_number(line, s.pr3d);
        line += ",\"conflicts\":" + std::to_string(s.conflicts_resolved) + "}\n";
        out << line;
    }
}

inline void save_masks(const EpisodeResult& result, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path + " for writing");
    write_masks(out, result);
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

inline MaskFile parse_masks(std::istream& in) {
    MaskFile file;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    auto bits = [](const nlohmann::json& arr, std::size_t n, const std::string& loc) {
        if (!arr.is_array() || arr.size() != n) {
            throw Error(ErrorCode::DimensionMismatch, loc + ": mask length differs from num_patches");
        }
        std::vector<std::uint8_t> out;
        out.reserve(n);
        for (const auto& v : arr) {
            if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
                throw Error(ErrorCode::MalformedTrace, loc + ": mask entries must be 0 or 1");
            }
            out.push_back(static_cast<std::uint8_t>(v.get<int>()));
        }
        return out;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string loc = "line " + std::to_string(line_no);
        try {
            auto j = nlohmann::json::parse(line);
            if (!have_header) {
                if (j.value("format", "") != kMasksFormat) {
                    throw Error(ErrorCode::MalformedTrace, loc + ": expected header with format " + kMasksFormat);
                }
                file.episode_id = j.at("episode_id").get<std::string>();
                file.num_patches = j.at("num_patches").get<std::size_t>();
                have_header = true;
                continue;
            }
            MaskRecord r;
            r.mask.step_index = j.at("t").get<std::size_t>();
            if (r.mask.step_index != file.records.size() + 1) {
                throw Error(ErrorCode::NonConsecutiveSteps, loc + ": expected t=" + std::to_string(file.records.size() + 1));
            }
            r.mask.mask2d = bits(j.at("mask2d"), file.num_patches, loc);
            r.mask.mask3d = bits(j.at("mask3d"), file.num_patches, loc);
            r.pr2d = j.at("pr2d").get<double>();
            r.pr3d = j.at("pr3d").get<double>();
            r.conflicts = j.at("conflicts").get<std::size_t>();
            file.records.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::MalformedTrace, loc + ": " + e.what());
        }
    }
    if (!have_header) throw Error(ErrorCode::MalformedTrace, "missing header line");
    return file;
}

inline MaskFile load_masks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    return parse_masks(in);
}

}  // namespace trimask
