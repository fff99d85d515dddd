// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "trimask/error.hpp"

namespace trimask {

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double tolerance = 1e-9;  // max centroid movement that counts as converged
};

/// Result of a 1D K-means run. Clusters are indexed in ascending centroid
/// order, so cluster 0 holds the smallest values.
struct KMeansResult {
    std::vector<std::size_t> assignment;  // per input value
    std::vector<double> centroids;        // ascending; size == num_clusters
    std::size_t num_clusters = 0;         // < k when fewer distinct values than k
    std::size_t iterations = 0;           // Lloyd iterations performed
    std::vector<double> sse_history;      // objective after each Lloyd iteration
    double sse = 0.0;
    bool refined = false;                 // exact optimum replaced the Lloyd fixed point
    bool degenerate = false;              // fewer than k distinct values
};

/// Within-cluster sum of squared deviations, summed directly.
inline double clustering_sse(std::span<const double> values, std::span<const std::size_t> assignment,
                             std::size_t num_clusters) {
    std::vector<double> sum(num_clusters, 0.0);
    std::vector<std::size_t> count(num_clusters, 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum[assignment[i]] += values[i];
        ++count[assignment[i]];
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t c = assignment[i];
        const double d = values[i] - sum[c] / double(count[c]);
        sse += d * d;
    }
    return sse;
}

namespace detail {

// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    const double pos = q * double(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - double(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Nearest centroid; ties go to the lower cluster. Centroids are ascending.
inline std::size_t nearest(std::span<const double> centroids, double x) {
    std::size_t best = 0;
    double best_d = std::abs(x - centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
        const double d = std::abs(x - centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

// Optimal partition of sorted values into k contiguous, nonempty segments
// whose boundaries never split equal values. Returns segment start offsets.
inline std::vector<std::size_t> optimal_segments(std::span<const double> sorted, std::size_t k) {
    const std::size_t n = sorted.size();
    const double shift = sorted[n / 2];
    std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = sorted[i] - shift;
        s1[i + 1] = s1[i] + x;
        s2[i + 1] = s2[i] + x * x;
    }
    auto cost = [&](std::size_t b, std::size_t e) {  // segment [b, e)
        const double sum = s1[e] - s1[b];
        return std::max(0.0, (s2[e] - s2[b]) - sum * sum / double(e - b));
    };
    auto boundary_ok = [&](std::size_t i) { return i == 0 || i == n || sorted[i - 1] < sorted[i]; };

    constexpr double inf = std::numeric_limits<double>::infinity();
    // best[j][e]: cost of splitting [0, e) into j+1 segments.
    std::vector<std::vector<double>> best(k, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> arg(k, std::vector<std::size_t>(n + 1, 0));
    for (std::size_t e = 1; e <= n; ++e) {
        if (boundary_ok(e)) best[0][e] = cost(0, e);
    }
    for (std::size_t j = 1; j < k; ++j) {
        for (std::size_t e = j + 1; e <= n; ++e) {
            if (!boundary_ok(e)) continue;
            for (std::size_t b = j; b < e; ++b) {
                if (!boundary_ok(b) || best[j - 1][b] == inf) continue;
                const double c = best[j - 1][b] + cost(b, e);
                if (c < best[j][e]) {
                    best[j][e] = c;
                    arg[j][e] = b;
                }
            }
        }
    }
    std::vector<std::size_t> starts(k, 0);
    std::size_t e = n;
    for (std::size_t j = k; j-- > 1;) {
        starts[j] = arg[j][e];
        e = starts[j];
    }
    return starts;
}

}  // namespace detail

/// 1D K-means: Lloyd iterations from deterministic quantile seeds
/// (quantiles (2i+1)/2k), followed by an exact dynamic-programming check
/// over contiguous partitions of the sorted data. If the Lloyd fixed point
/// is a strictly worse local optimum, the exact partition is returned.
inline KMeansResult kmeans_1d(std::span<const double> values, std::size_t k, const KMeansOptions& options = {}) {
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "k-means needs k >= 1");
    if (values.size() < k) {
        throw Error(ErrorCode::TooFewPatches,
                    std::to_string(values.size()) + " values cannot form " + std::to_string(k) + " clusters");
    }
    const std::size_t n = values.size();
    std::vector<double> sorted(values.begin(), values.end());
    std::ranges::sort(sorted);
    std::vector<double> distinct;
    std::ranges::unique_copy(sorted, std::back_inserter(distinct));

    KMeansResult result;
    result.assignment.assign(n, 0);

    if (distinct.size() <= k) {
        // Each distinct level is its own cluster; exact and trivially optimal.
        result.degenerate = distinct.size() < k;
        result.num_clusters = distinct.size();
        result.centroids = distinct;
        for (std::size_t i = 0; i < n; ++i) {
            result.assignment[i] =
                std::size_t(std::ranges::lower_bound(distinct, values[i]) - distinct.begin());
        }
        result.sse = 0.0;
        return result;
    }

    result.num_clusters = k;
    std::vector<double> centroids(k);
    for (std::size_t c = 0; c < k; ++c) {
        centroids[c] = detail::quantile_sorted(sorted, double(2 * c + 1) / double(2 * k));
    }
    std::vector<double> sum(k);
    std::vector<std::size_t> count(k);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        std::ranges::fill(sum, 0.0);
        std::ranges::fill(count, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = detail::nearest(centroids, values[i]);
            result.assignment[i] = c;
            sum[c] += values[i];
            ++count[c];
        }
        double moved = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (count[c] == 0) continue;  // empty cluster keeps its centroid
            const double next = sum[c] / double(count[c]);
            moved = std::max(moved, std::abs(next - centroids[c]));
            centroids[c] = next;
        }
        ++result.iterations;
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = values[i] - centroids[result.assignment[i]];
            sse += d * d;
        }
        result.sse_history.push_back(sse);
        if (moved < options.tolerance) break;
    }

    // Lloyd may leave an empty cluster; compact so cluster ids stay dense.
    std::vector<std::size_t> remap(k, k);
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (std::ranges::find(result.assignment, c) != result.assignment.end()) remap[c] = used++;
    }
    for (auto& a : result.assignment) a = remap[a];
    double lloyd_sse = clustering_sse(values, result.assignment, used);

    const auto starts = detail::optimal_segments(sorted, k);
    std::vector<std::size_t> exact(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto seg = std::size_t(std::ranges::upper_bound(starts, std::size_t(
                                         std::ranges::lower_bound(sorted, values[i]) - sorted.begin())) -
                                     starts.begin()) - 1;
        exact[i] = seg;
    }
    const double exact_sse = clustering_sse(values, exact, k);
    if (used < k || exact_sse < lloyd_sse * (1.0 - 1e-12)) {
        result.assignment = std::move(exact);
        result.refined = true;
        lloyd_sse = exact_sse;
    }
    result.sse = lloyd_sse;

    result.centroids.assign(k, 0.0);
    std::vector<std::size_t> cnt(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        result.centroids[result.assignment[i]] += values[i];
        ++cnt[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) result.centroids[c] /= double(cnt[c]);
    return result;
}

}  // namespace trimask
