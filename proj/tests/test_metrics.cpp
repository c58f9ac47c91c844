// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "driftguard/metrics.hpp"

namespace dg = driftguard;

namespace {

std::vector<dg::Point2> gaussian(std::size_t n, dg::Point2 mu, double sd, std::uint64_t seed) {
    dg::Rng rng(seed);
    std::vector<dg::Point2> out(n);
    for (auto& p : out) p = {mu.x + sd * rng.normal(), mu.y + sd * rng.normal()};
    return out;
}

// Closed-form KL(N(m1, s1^2 I) || N(m2, s2^2 I)) in two dimensions.
double gaussian_kl(dg::Point2 m1, double s1, dg::Point2 m2, double s2) {
    const double r = (s1 * s1) / (s2 * s2);
    return r - 1.0 - std::log(r) + dg::squared_norm(m1 - m2) / (2.0 * s2 * s2);
}

double mean_estimate(dg::Point2 m1, double s1, dg::Point2 m2, double s2) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        sum += dg::knn_kl(gaussian(5000, m1, s1, 100 + seed), gaussian(5000, m2, s2, 200 + seed), 5);
    }
    return sum / 5.0;
}

// Brute-force k-th neighbour distance squared.
double brute_kth(const std::vector<dg::Point2>& pts, dg::Point2 q, std::size_t k, bool skip_self) {
    std::vector<double> d;
    bool skipped = !skip_self;
    for (auto p : pts) {
        if (!skipped && p == q) {
            skipped = true;
            continue;
        }
        d.push_back(dg::squared_norm(p - q));
    }
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    return d[k - 1];
}

dg::DriftReport report(double kl, double theta) {
    dg::DriftReport r;
    r.kl = kl;
    r.delta_theta_l2 = theta;
    return r;
}

}  // namespace

TEST(Knn, IndexMatchesBruteForce) {
    const auto pts = gaussian(500, {0, 0}, 1.0, 3);
    const dg::detail::KnnIndex idx(pts);
    const auto queries = gaussian(100, {0.5, 0}, 1.5, 4);
    for (std::size_t k : {1u, 5u, 12u}) {
        for (auto q : queries) EXPECT_EQ(idx.kth_sq(q, k, false), brute_kth(pts, q, k, false));
        for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(idx.kth_sq(pts[i], k, true), brute_kth(pts, pts[i], k, true));
    }
}

TEST(Knn, SameDistributionNearZero) {
    EXPECT_NEAR(mean_estimate({0, 0}, 1.0, {0, 0}, 1.0), 0.0, 0.05);
}

TEST(Knn, MeanShiftCase) {
    const double truth = gaussian_kl({2, 0}, 1.0, {0, 0}, 1.0);
    ASSERT_DOUBLE_EQ(truth, 2.0);
    EXPECT_NEAR(mean_estimate({2, 0}, 1.0, {0, 0}, 1.0) / truth, 1.0, 0.15);
}

TEST(Knn, VarianceScaleCase) {
    const double truth = gaussian_kl({0, 0}, 1.0, {0, 0}, 2.0);
    EXPECT_NEAR(truth, std::log(4.0) - 1.0 + 0.25, 1e-12);
    EXPECT_NEAR(mean_estimate({0, 0}, 1.0, {0, 0}, 2.0) / truth, 1.0, 0.15);
}

TEST(Knn, DuplicatePointsAreJittered) {
    auto p = gaussian(200, {0, 0}, 1.0, 1);
    for (std::size_t i = 0; i < 20; ++i) p[100 + i] = p[i];
    const auto q = gaussian(200, {0, 0}, 1.0, 2);
    const double v = dg::knn_kl(p, q, 5);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(v, dg::knn_kl(p, q, 5));
}

TEST(Knn, RejectsBadArguments) {
    const auto p = gaussian(49, {0, 0}, 1.0, 1);
    const auto q = gaussian(100, {0, 0}, 1.0, 2);
    EXPECT_THROW(dg::knn_kl(p, q), dg::InputError);
    EXPECT_THROW(dg::knn_kl(q, q, 0), dg::InputError);
    EXPECT_THROW(dg::knn_kl(q, q, 100), dg::InputError);
}

TEST(Coverage, CountsInsideRadius) {
    const std::vector<dg::Point2> means{{0, 0}, {10, 0}};
    std::map<std::size_t, std::vector<dg::Point2>> s;
    s[0] = {{0, 0}, {1, 0}, {0, 1.5}, {2, 0}};
    s[1] = {{0, 0}, {10, 0}};
    const auto c = dg::class_coverage(s, means, 1.5);
    EXPECT_DOUBLE_EQ(c[0], 0.75);
    EXPECT_DOUBLE_EQ(c[1], 0.5);
    s.erase(1);
    EXPECT_THROW(dg::class_coverage(s, means, 1.5), dg::InputError);
}

TEST(Coverage, InvariantToRotationAndOrder) {
    const auto pts = gaussian(300, {3, 1}, 1.0, 9);
    const std::vector<dg::Point2> means{{3, 1}};
    const double th = 0.7;
    auto rotate = [th](dg::Point2 p) {
        return dg::Point2{std::cos(th) * p.x - std::sin(th) * p.y, std::sin(th) * p.x + std::cos(th) * p.y};
    };
    std::vector<dg::Point2> rot, rev(pts.rbegin(), pts.rend());
    for (auto p : pts) rot.push_back(rotate(p));
    const std::vector<dg::Point2> rmeans{rotate(means[0])};
    const double a = dg::class_coverage({{0, pts}}, means, 1.0)[0];
    EXPECT_NEAR(dg::class_coverage({{0, rot}}, rmeans, 1.0)[0], a, 1.0 / 300);
    EXPECT_EQ(dg::class_coverage({{0, rev}}, means, 1.0)[0], a);
}

TEST(Ranks, TiesAveraged) {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    EXPECT_EQ(dg::average_ranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
    const std::vector<double> a{1, 2, 3, 4}, b{10, 20, 30, 45}, c{4, 3, 2, 1};
    EXPECT_NEAR(dg::spearman(a, b), 1.0, 1e-12);
    EXPECT_NEAR(dg::spearman(a, c), -1.0, 1e-12);
}

TEST(Bound, SyntheticReports) {
    const std::vector<dg::DriftReport> r{report(1.0, 1.0), report(4.0, 2.0), report(3.0, 3.0)};
    const auto s = dg::bound_check(r);
    EXPECT_DOUBLE_EQ(s.max_ratio, 2.0);
    EXPECT_NEAR(s.rank_correlation, 0.5, 1e-12);
    const std::vector<dg::DriftReport> zero{report(0.1, 0.0), report(1.0, 1.0), report(2.0, 2.0)};
    EXPECT_DOUBLE_EQ(dg::bound_check(zero).max_ratio, 1.0);
    EXPECT_THROW(dg::bound_check(std::span(r).first(2)), dg::InputError);
}

TEST(DeltaEps, OutputBiasShift) {
    dg::Rng rng(1);
    const auto base = dg::init_params({}, rng);
    auto per = base;
    per.b2.values[0] += 0.6;
    per.b2.values[1] -= 0.8;
    const auto probes = dg::make_eps_probes(512, 100, 5, 7);
    EXPECT_NEAR(dg::delta_eps(base, per, probes), 512.0, 1e-9);
    EXPECT_EQ(dg::delta_eps(base, base, probes), 0.0);
}

TEST(DeltaEps, ProbesAreFixedBySeed) {
    const auto a = dg::make_eps_probes(64, 100, 5, 7);
    const auto b = dg::make_eps_probes(64, 100, 5, 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_EQ(a[i].t, b[i].t);
        EXPECT_LT(a[i].c, 5u);
    }
}
