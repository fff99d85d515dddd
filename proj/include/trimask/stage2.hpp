// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "trimask/candidate.hpp"
#include "trimask/error.hpp"
#include "trimask/kmeans1d.hpp"
#include "trimask/stage1.hpp"
#include "trimask/trace.hpp"

namespace trimask {

enum class SemanticLabel : std::uint8_t { OBJ, ROB, BG };

constexpr std::string_view to_string(SemanticLabel label) {
    switch (label) {
        case SemanticLabel::OBJ: return "OBJ";
        case SemanticLabel::ROB: return "ROB";
        case SemanticLabel::BG: return "BG";
    }
    return "?";
}

inline SemanticLabel parse_label(std::string_view s) {
    if (s == "OBJ") return SemanticLabel::OBJ;
    if (s == "ROB") return SemanticLabel::ROB;
    if (s == "BG") return SemanticLabel::BG;
    throw Error(ErrorCode::MalformedTrace, "unknown semantic label '" + std::string(s) + "'");
}

struct AttentionDecomposition {
    std::vector<double> para;
    std::vector<double> ortho;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Splits a3d into its Euclidean projection onto a2d and the residual.
/// The residual is re-projected once more to clean up cancellation error
/// when a3d is nearly collinear with a2d.
inline AttentionDecomposition decompose_attention(std::span<const double> a3d, std::span<const double> a2d) {
    if (a3d.size() != a2d.size()) {
        throw Error(ErrorCode::DimensionMismatch, "attention vectors differ in length");
    }
    AttentionDecomposition out;
    out.para.assign(a3d.size(), 0.0);
    out.ortho.assign(a3d.begin(), a3d.end());
    const double aa = dot(a2d, a2d);
    if (aa == 0.0) return out;
    for (int pass = 0; pass < 2; ++pass) {
        const double c = dot(out.ortho, a2d) / aa;
        if (c == 0.0) break;
        for (std::size_t i = 0; i < a3d.size(); ++i) {
            out.para[i] += c * a2d[i];
        }
        for (std::size_t i = 0; i < a3d.size(); ++i) {
            out.ortho[i] = a3d[i] - out.para[i];
        }
    }
    return out;
}

/// Attention-based modality shares at one patch.
struct Stage2Salience {
    double m2d = 0.0;
    double m3d = 0.0;         // orthogonal (3D-unique) share; may exceed 1 - m2d
    double para_norm = 0.0;   // L1
    double ortho_norm = 0.0;  // L1
    bool degenerate = false;  // both attention vectors are zero
};

inline Stage2Salience stage2_salience(std::span<const double> a2d, std::span<const double> a3d) {
    Stage2Salience s;
    const double n2d = l1_norm(a2d);
    const double n3d = l1_norm(a3d);
    const auto parts = decompose_attention(a3d, a2d);
    s.para_norm = l1_norm(parts.para);
    s.ortho_norm = l1_norm(parts.ortho);
    const double denom = n2d + n3d;
    if (denom == 0.0) {
        s.degenerate = true;
        return s;
    }
    s.m2d = n2d / denom;
    s.m3d = s.ortho_norm / denom;
    return s;
}

inline Stage2Salience stage2_salience(const PatchObservation& patch) { return stage2_salience(patch.a2d, patch.a3d); }

/// Comprehensive per-patch attention score used for semantic clustering.
inline double comprehensive_score(const PatchObservation& patch) { return l1_norm(patch.a2d) + l1_norm(patch.a3d); }

struct SemanticClustering {
    std::vector<SemanticLabel> labels;
    std::array<double, 3> centroid{};  // indexed by SemanticLabel; NaN for unused labels
    bool degenerate = false;
    KMeansResult kmeans;
};

/// Three-way semantic split on comprehensive attention scores. The highest
/// cluster is the target object, the middle the robot, the lowest background.
/// With fewer than three distinct score levels the step is flagged degenerate:
/// one level maps every patch to OBJ, two levels map to OBJ and ROB, so a
/// featureless step never feeds the random background rule.
inline SemanticClustering cluster_semantics(std::span<const double> scores, [[maybe_unused]] std::uint64_t rng_seed = 0,
                                            const KMeansOptions& options = {}) {
    if (scores.size() < 3) {
        throw Error(ErrorCode::TooFewPatches, "semantic clustering needs at least 3 patches, got " +
                                                  std::to_string(scores.size()));
    }
    SemanticClustering out;
    out.kmeans = kmeans_1d(scores, 3, options);
    out.degenerate = out.kmeans.degenerate;
    const std::size_t nc = out.kmeans.num_clusters;
    // Cluster ids are ascending by centroid; map the top cluster to OBJ.
    auto label_of = [nc](std::size_t cluster) {
        const std::size_t rank_from_top = nc - 1 - cluster;
        return static_cast<SemanticLabel>(rank_from_top);
    };
    out.centroid.fill(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < nc; ++c) {
        out.centroid[static_cast<std::size_t>(label_of(c))] = out.kmeans.centroids[c];
    }
    out.labels.reserve(scores.size());
    for (std::size_t a : out.kmeans.assignment) out.labels.push_back(label_of(a));
    return out;
}

/// Mean-over-patches baselines for the robot rule.
struct SemanticBaselines {
    double mu2d = 0.0;
    double mu3d = 0.0;
};

inline SemanticBaselines compute_baselines(std::span<const Stage2Salience> salience) {
    SemanticBaselines b;
    std::size_t n = 0;
    for (const auto& s : salience) {
        if (s.degenerate) continue;
        b.mu2d += s.m2d;
        b.mu3d += s.m3d;
        ++n;
    }
    if (n == 0) throw Error(ErrorCode::AllDegenerate, "no patch has nonzero attention");
    b.mu2d /= double(n);
    b.mu3d /= double(n);
    return b;
}

struct Stage2Rules {
    double theta_2dext = 0.95;  // "extreme 2D reliance"
    double eps_3d = 0.02;       // "near-zero 3D response"
};

/// Semantic candidate rule. `keep_bg` is the outcome of this patch's
/// background draw for the current step.
inline CandidateSet stage2_candidates(SemanticLabel label, double m2d_hat, double m3d_hat,
                                      const SemanticBaselines& baselines, bool keep_bg, const Stage2Rules& rules = {}) {
    switch (label) {
        case SemanticLabel::BG:
            return keep_bg ? CandidateSet::both() : CandidateSet::none();
        case SemanticLabel::ROB:
            if (m3d_hat > baselines.mu3d) return CandidateSet::both();
            if (m2d_hat > baselines.mu2d) return CandidateSet::only2d();
            return CandidateSet::none();
        case SemanticLabel::OBJ:
            if (m2d_hat > rules.theta_2dext && m3d_hat < rules.eps_3d) return CandidateSet::only2d();
            return CandidateSet::both();
    }
    return CandidateSet::none();
}

/// Analysis-only variant with separate per-modality clusterings: image
/// attention into three levels, point-cloud attention into two.
struct ModalClustering {
    KMeansResult image;
    KMeansResult point;
};

inline ModalClustering cluster_per_modality(const StepObservation& step) {
    std::vector<double> s2d, s3d;
    for (const auto& p : step.patches) {
        s2d.push_back(l1_norm(p.a2d));
        s3d.push_back(l1_norm(p.a3d));
    }
    return {kmeans_1d(s2d, 3), kmeans_1d(s3d, 2)};
}

}  // namespace trimask
