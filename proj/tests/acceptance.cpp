// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "test_helpers.hpp"
#include "trimask/trimask.hpp"

using namespace trimask;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// ---------------------------------------------------------------------------

Verdict ema_oracle() {
    const auto start = Clock::now();
    const EmaConfig cfg{0.85, 7};
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int seq = 0; seq < 1000; ++seq) {
        std::vector<double> xs(20);
        for (auto& x : xs) x = u(rng);
        const auto direct = oracle::ema_direct(xs, cfg.k, cfg.beta);
        IndicatorTrack track;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            track = ema_update(track, xs[i], cfg, i + 1);
            const double expected = i + 1 < cfg.k ? oracle::prefix_mean(xs, i + 1) : direct[i];
            worst = std::max(worst, std::abs(track.x_hat - expected));
        }
    }
    const double secs = seconds_since(start);
    return {worst <= 1e-12 && secs < 1.0, "max_err=" + fmt_double(worst) + " time=" + fmt_double(secs) + "s"};
}

Verdict decomposition_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    double worst_rec = 0.0, worst_orth = 0.0, worst_ls = 0.0;
    for (int pair = 0; pair < 10000; ++pair) {
        const std::size_t d = dim(rng);
        std::vector<double> a2d(d), a3d(d);
        const bool nonneg = pair % 2 == 0;
        for (std::size_t i = 0; i < d; ++i) {
            a2d[i] = nonneg ? expo(rng) : normal(rng);
            a3d[i] = nonneg ? expo(rng) : normal(rng);
        }
        const auto parts = decompose_attention(a3d, a2d);
        double n3 = 0.0, rec = 0.0, np = 0.0, no = 0.0, ip = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            n3 += a3d[i] * a3d[i];
            rec += std::pow(parts.para[i] + parts.ortho[i] - a3d[i], 2);
            np += parts.para[i] * parts.para[i];
            no += parts.ortho[i] * parts.ortho[i];
            ip += parts.para[i] * parts.ortho[i];
        }
        n3 = std::sqrt(n3);
        if (n3 > 0.0) worst_rec = std::max(worst_rec, std::sqrt(rec) / n3);
        const double scale = std::sqrt(np) * std::sqrt(no);
        if (scale > 0.0) worst_orth = std::max(worst_orth, std::abs(ip) / scale);

        const double c = oracle::least_squares_scale(a3d, a2d);
        double diff = 0.0;
        for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(parts.para[i] - c * a2d[i]));
        worst_ls = std::max(worst_ls, diff / std::max(1.0, n3));
    }
    const double secs = seconds_since(start);
    const bool ok = worst_rec <= 1e-9 && worst_orth <= 1e-9 && worst_ls <= 1e-9 && secs < 2.0;
    return {ok, "recon=" + fmt_double(worst_rec) + " orth=" + fmt_double(worst_orth) + " lsq=" + fmt_double(worst_ls) +
                    " time=" + fmt_double(secs) + "s"};
}

Verdict clustering_oracle() {
    const auto start = Clock::now();
    std::mt19937_64 rng(303);
    std::uniform_int_distribution<std::size_t> size(3, 12);
    std::lognormal_distribution<double> draw(0.0, 1.5);
    int mismatches = 0;
    for (int set = 0; set < 200; ++set) {
        std::vector<double> values(size(rng));
        for (auto& v : values) v = draw(rng);
        const auto km = kmeans_1d(values, 3);
        std::vector<int> mine(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) mine[i] = int(km.assignment[i]);
        const double got = oracle::sse_of_groups(values, mine, 3);
        const auto best = oracle::best_contiguous_3partition(values);
        const double want = oracle::sse_of_groups(values, best, 3);
        bool ok = std::abs(got - want) <= 1e-9 * std::max(1.0, want);
        if (values.size() <= 8) ok = ok && std::abs(got - oracle::best_any_3partition_sse(values)) <= 1e-9 * std::max(1.0, want);
        mismatches += ok ? 0 : 1;
    }

    int good_episodes = 0;
    double worst_acc = 1.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        ScenarioSpec spec;
        spec.num_patches = 64;
        spec.steps = 10;
        spec.noise_sigma = 0.09;
        spec.seed = seed;
        const auto ep = generate_episode(spec);
        std::size_t hit = 0, total = 0;
        for (const auto& step : ep.trace.steps) {
            std::vector<double> scores;
            for (const auto& p : step.patches) scores.push_back(comprehensive_score(p));
            const auto c = cluster_semantics(scores);
            for (std::size_t i = 0; i < scores.size(); ++i) hit += c.labels[i] == ep.truth.labels[i];
            total += scores.size();
        }
        const double acc = double(hit) / double(total);
        worst_acc = std::min(worst_acc, acc);
        good_episodes += acc >= 0.95;
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && good_episodes >= 95 && secs < 10.0,
            "sse_mismatches=" + std::to_string(mismatches) + " episodes>=95%=" + std::to_string(good_episodes) +
                " worst_acc=" + fmt_double(worst_acc) + " time=" + fmt_double(secs) + "s"};
}

// Six patches, five steps, hand-derived candidate sets. Patch roles:
// 0 OBJ whose modality rule says 3D only, semantic rule says 2D only -> conflict, keep 2D
// 1 OBJ whose smoothed 3D share climbs past tau3d at step 3
// 2 ROB whose 3D-unique attention rises above the mean at step 4
// 3 ROB with 2D-only semantics against a 3D-only modality vote -> conflict
// 4,5 BG with a zero keep probability
EpisodeTrace conformance_trace() {
    using trimask::testing::make_patch;
    EpisodeTrace tr;
    tr.episode_id = "conformance";
    tr.num_patches = 6;
    tr.feat_dim = 2;
    tr.attn_dim = 2;
    for (std::size_t t = 1; t <= 5; ++t) {
        StepObservation s;
        s.step_index = t;
        s.patches.push_back(make_patch(0, {0.5, 0}, {0.5, 0}, {10, 0}, {0, 0.01}));
        if (t == 1) s.patches.push_back(make_patch(1, {1, 0}, {0, 0}, {4, 0}, {0, 6}));
        else s.patches.push_back(make_patch(1, {0.7, 0}, {0.3, 0}, {4, 0}, {0, 6}));
        if (t <= 3) s.patches.push_back(make_patch(2, {0.9, 0}, {0.1, 0}, {0.5, 0}, {0.3, 0.2}));
        else s.patches.push_back(make_patch(2, {0.9, 0}, {0.1, 0}, {0.5, 0}, {0.1, 0.4}));
        s.patches.push_back(make_patch(3, {0.75, 0}, {0.25, 0}, {0.8, 0}, {0.2, 0}));
        s.patches.push_back(make_patch(4, {0.5, 0}, {0.5, 0}, {0.005, 0}, {0, 0.005}));
        s.patches.push_back(make_patch(5, {0.5, 0}, {0.5, 0}, {0.01, 0}, {0, 0}));
        tr.steps.push_back(std::move(s));
    }
    return tr;
}

Verdict algorithm_conformance() {
    PrunerConfig cfg;
    cfg.thresholds = {0.08, 0.20};
    cfg.ema = {0.5, 3};
    cfg.bg_keep_prob = 0.0;
    // expected[t-1][patch] = {keep2d, keep3d}
    const std::vector<std::vector<std::pair<int, int>>> expected = {
        {{1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}, {1, 1}},
        {{1, 0}, {1, 1}, {0, 0}, {1, 0}, {0, 0}, {0, 0}},
        {{1, 0}, {0, 1}, {0, 0}, {1, 0}, {0, 0}, {0, 0}},
        {{1, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 0}, {0, 0}},
        {{1, 0}, {0, 1}, {1, 1}, {1, 0}, {0, 0}, {0, 0}},
    };
    const std::vector<std::size_t> expected_conflicts = {0, 2, 2, 2, 2};
    const auto result = prune_episode(conformance_trace(), cfg);
    std::size_t wrong = 0;
    for (std::size_t t = 0; t < expected.size(); ++t) {
        for (std::size_t p = 0; p < 6; ++p) {
            wrong += result.masks[t].mask2d[p] != expected[t][p].first;
            wrong += result.masks[t].mask3d[p] != expected[t][p].second;
        }
        wrong += result.stats[t].conflicts_resolved != expected_conflicts[t];
    }
    return {wrong == 0, "mismatches=" + std::to_string(wrong)};
}

Verdict background_statistics() {
    PrunerConfig cfg;
    std::size_t draws = 0, kept = 0;
    for (std::uint64_t seed = 1; draws < 12000; ++seed) {
        ScenarioSpec spec;
        spec.seed = seed;
        cfg.seed = seed * 7919;
        const auto ep = generate_episode(spec);
        PrunerState state(cfg.seed);
        for (const auto& step : ep.trace.steps) {
            const auto out = prune_step(state, step, cfg);
            if (step.step_index == 1) continue;
            for (std::size_t p = 0; p < out.labels.size(); ++p) {
                if (out.labels[p] != SemanticLabel::BG) continue;
                ++draws;
                kept += out.stage2[p] == CandidateSet::both();
            }
        }
    }
    const double rate = double(kept) / double(draws);
    const auto ci = oracle::binomial_interval_99(0.10, draws);
    return {rate >= ci.lo && rate <= ci.hi, "draws=" + std::to_string(draws) + " rate=" + fmt_double(rate) +
                                                " ci=[" + fmt_double(ci.lo) + "," + fmt_double(ci.hi) + "]"};
}

Verdict modality_asymmetry() {
    ScenarioSpec spec;
    spec.profiles = {RegionProfile{0.15, 0.5, 0.45}, RegionProfile{0.15, 0.3, 0.3}, RegionProfile{0.05, 0.3, 0.3}};
    spec.noise_sigma = 0.05;
    spec.indicator_jitter = 0.02;
    int wins = 0;
    double sum2 = 0.0, sum3 = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        spec.seed = seed;
        PrunerConfig cfg;
        cfg.seed = seed;
        const auto result = prune_episode(generate_episode(spec).trace, cfg);
        const auto s = summarize(result, CostModel{});
        wins += s.mean_pr3d > s.mean_pr2d;
        sum2 += s.mean_pr2d;
        sum3 += s.mean_pr3d;
    }
    return {wins >= 95, "episodes_3d>2d=" + std::to_string(wins) + " mean_pr2d=" + fmt_double(sum2 / 100) +
                            " mean_pr3d=" + fmt_double(sum3 / 100)};
}

Verdict stabilization() {
    ScenarioSpec spec;
    spec.num_patches = 64;
    spec.steps = 30;
    spec.drift = {DriftKind::Sine, 0.3, 10.0};
    spec.indicator_jitter = 0.05;
    spec.profiles[0].m_s1_3d = 0.2;
    std::size_t smooth = 0, raw = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        spec.seed = seed;
        const auto trace = generate_episode(spec).trace;
        PrunerConfig on;
        on.seed = seed;
        PrunerConfig off = on;
        off.smoothing = false;
        smooth += count_flips(prune_episode(trace, on).masks);
        raw += count_flips(prune_episode(trace, off).masks);
    }
    return {smooth < raw, "flips_smoothed=" + std::to_string(smooth) + " flips_raw=" + std::to_string(raw)};
}

Verdict budget_exactness() {
    std::mt19937_64 rng(404);
    std::uniform_int_distribution<std::size_t> size(8, 256);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t wrong = 0, cases = 0;
    for (int m = 0; m < 100; ++m) {
        const std::size_t p = size(rng);
        RetentionMask mask{2, std::vector<std::uint8_t>(p), std::vector<std::uint8_t>(p)};
        std::vector<double> s2(p), s3(p);
        for (std::size_t i = 0; i < p; ++i) {
            mask.mask2d[i] = u(rng) < 0.8;
            mask.mask3d[i] = u(rng) < 0.8;
            s2[i] = u(rng);
            s3[i] = u(rng);
        }
        for (int tenths : {5, 6, 7, 8}) {
            // ceil(tenths * 2p / 10) in integer arithmetic
            const std::size_t target = (std::size_t(tenths) * 2 * p + 9) / 10;
            const std::size_t before = mask.pruned();
            const auto out = apply_budget(mask, s2, s3, tenths / 10.0);
            ++cases;
            const std::size_t want = std::max(target, before);
            bool ok = out.pruned() == want;
            // Nothing already pruned comes back.
            for (std::size_t i = 0; i < p; ++i) {
                ok = ok && out.mask2d[i] <= mask.mask2d[i] && out.mask3d[i] <= mask.mask3d[i];
            }
            wrong += !ok;
        }
    }
    return {wrong == 0, "cases=" + std::to_string(cases) + " wrong=" + std::to_string(wrong)};
}

Verdict cost_sanity() {
    const CostModel model;
    const std::size_t p = 256, steps = 20;
    auto speedup_at = [&](double rate) {
        std::vector<RetentionMask> masks;
        const auto keep = std::size_t(std::llround((1.0 - rate) * double(p)));
        for (std::size_t t = 1; t <= steps; ++t) {
            RetentionMask m{t, std::vector<std::uint8_t>(p, 0), std::vector<std::uint8_t>(p, 0)};
            for (std::size_t i = 0; i < keep; ++i) m.mask2d[i] = m.mask3d[i] = 1;
            masks.push_back(std::move(m));
        }
        return predict_speedup(masks, model, 2 * p);
    };
    const double half = speedup_at(0.5);
    bool monotone = true;
    double prev = 0.0;
    std::string trail;
    for (double r : {0.0, 0.25, 0.5, 0.75}) {
        const double s = speedup_at(r);
        monotone = monotone && s > prev;
        prev = s;
        trail += (trail.empty() ? "" : ",") + fmt_double(s);
    }
    return {half >= 1.2 && half <= 4.0 && monotone, "speedup@50%=" + fmt_double(half) + " series=" + trail};
}

int run_cli(const std::string& args) {
    const std::string cmd = "\"" TRIMASK_CLI_PATH "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict determinism() {
    const auto root = trimask::testing::temp_dir("acceptance_determinism");
    for (const char* run : {"a", "b"}) {
        const auto dir = root / run;
        if (run_cli("simulate --seed 17 --out " + (dir / "sim").string()) != 0) return {false, "simulate failed"};
        if (run_cli("run --trace " + (dir / "sim" / "trace.jsonl").string() + " --seed 17 --out " +
                    (dir / "run").string()) != 0) {
            return {false, "run failed"};
        }
        if (run_cli("stats --masks " + (dir / "run" / "masks.jsonl").string() + " --out " +
                    (dir / "stats.json").string()) != 0) {
            return {false, "stats failed"};
        }
    }
    std::size_t files = 0, differing = 0;
    for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root / "a");
        ++files;
        differing += slurp(entry.path()) != slurp(root / "b" / rel);
    }
    return {files == 6 && differing == 0, "files=" + std::to_string(files) + " differing=" + std::to_string(differing)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"ema-oracle", ema_oracle},
        {"decomposition-oracle", decomposition_oracle},
        {"clustering-oracle", clustering_oracle},
        {"algorithm-conformance", algorithm_conformance},
        {"background-retention", background_statistics},
        {"modality-pruning-asymmetry", modality_asymmetry},
        {"temporal-stabilization", stabilization},
        {"budget-exactness", budget_exactness},
        {"cost-model-sanity", cost_sanity},
        {"determinism", determinism},
    };
    const auto start = Clock::now();
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << name << "  " << v.detail << "\n";
    }
    const double secs = seconds_since(start);
    const bool fast = secs < 60.0;
    failures += !fast;
    std::cout << (fast ? "[PASS] " : "[FAIL] ") << "suite-runtime  " << fmt_double(secs) << "s\n";
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
