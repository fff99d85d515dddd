// Copyright (C) 2026 The trimask authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "trimask/stage1.hpp"

using namespace trimask;

TEST(Stage1Salience, EqualNorms) {
    const std::vector<double> f2d{1, -1}, f3d{1, 1};
    const auto s = stage1_salience(f2d, f3d);
    EXPECT_DOUBLE_EQ(s.m2d, 0.5);
    EXPECT_DOUBLE_EQ(s.m3d, 0.5);
    EXPECT_FALSE(s.degenerate);
}

TEST(Stage1Salience, L1Ratio) {
    // 3 / (3 + 1)
    const std::vector<double> f2d{3, 0}, f3d{1, 0};
    const auto s = stage1_salience(f2d, f3d);
    EXPECT_DOUBLE_EQ(s.m2d, 0.75);
    EXPECT_DOUBLE_EQ(s.m3d, 0.25);
}

TEST(Stage1Salience, ZeroFeaturesAreDegenerate) {
    const std::vector<double> z{0, 0};
    const auto s = stage1_salience(z, z);
    EXPECT_EQ(s.m2d, 0.5);
    EXPECT_EQ(s.m3d, 0.5);
    EXPECT_TRUE(s.degenerate);
}

TEST(Stage1Candidates, Branches) {
    const Stage1Thresholds th{0.08, 0.20};
    EXPECT_EQ(stage1_candidates(0.05, th), CandidateSet::only2d());
    EXPECT_EQ(stage1_candidates(0.08, th), CandidateSet::both());
    EXPECT_EQ(stage1_candidates(0.20, th), CandidateSet::both());
    EXPECT_EQ(stage1_candidates(0.5, th), CandidateSet::only3d());
}

TEST(Stage1Candidates, InvalidThresholds) {
    for (auto th : {Stage1Thresholds{0.2, 0.2}, Stage1Thresholds{0.3, 0.2}, Stage1Thresholds{0.0, 0.2},
                    Stage1Thresholds{0.1, 1.0}}) {
        try {
            stage1_candidates(0.1, th);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidThresholds);
        }
    }
}

TEST(Stage1Average, AveragesEveryObservation) {
    EpisodeTrace tr;
    tr.num_patches = 2;
    tr.feat_dim = 1;
    tr.attn_dim = 1;
    tr.steps.push_back({1, {{0, {3}, {1}, {0}, {0}}, {1, {1}, {1}, {0}, {0}}}});
    const auto avg = stage1_average(tr);
    EXPECT_DOUBLE_EQ(avg.m2d, (0.75 + 0.5) / 2);
    EXPECT_DOUBLE_EQ(avg.m3d, (0.25 + 0.5) / 2);
}

TEST(Stage1Property, SharesSumToOneAndAreScaleInvariant) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t d = 1 + rng() % 40;
        std::vector<double> f2d(d), f3d(d);
        for (auto& x : f2d) x = normal(rng);
        for (auto& x : f3d) x = normal(rng) * 0.2;
        const auto s = stage1_salience(f2d, f3d);
        EXPECT_NEAR(s.m2d + s.m3d, 1.0, 1e-12);
        EXPECT_GE(s.m2d, 0.0);
        EXPECT_LE(s.m2d, 1.0);
        const double c = scale(rng);
        for (auto& x : f2d) x *= c;
        for (auto& x : f3d) x *= c;
        const auto t = stage1_salience(f2d, f3d);
        EXPECT_NEAR(t.m2d, s.m2d, 1e-12);
        EXPECT_NEAR(t.m3d, s.m3d, 1e-12);
    }
}

TEST(Stage1Property, CandidateSequenceIsMonotoneWithTwoTransitions) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 200; ++trial) {
        double a = u(rng), b = u(rng);
        if (std::abs(a - b) < 1e-3) continue;
        const Stage1Thresholds th{std::min(a, b), std::max(a, b)};
        int transitions = 0;
        CandidateSet prev = stage1_candidates(0.0, th);
        EXPECT_EQ(prev, CandidateSet::only2d());
        for (int i = 1; i <= 10000; ++i) {
            const auto c = stage1_candidates(double(i) / 10000.0, th);
            EXPECT_FALSE(c.empty());
            if (c != prev) {
                ++transitions;
                if (transitions == 1) { EXPECT_EQ(c, CandidateSet::both()); }
                if (transitions == 2) { EXPECT_EQ(c, CandidateSet::only3d()); }
            }
            prev = c;
        }
        EXPECT_EQ(transitions, 2);
        EXPECT_EQ(prev, CandidateSet::only3d());
    }
}
