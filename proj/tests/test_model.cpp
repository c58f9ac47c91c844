// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "driftguard/adam.hpp"
#include "driftguard/checksum.hpp"
#include "driftguard/gradcheck.hpp"
#include "driftguard/model.hpp"

namespace dg = driftguard;

namespace {

dg::ModelParams random_params(std::uint64_t seed, dg::Arch arch = {}) {
    dg::Rng rng(seed);
    dg::ModelParams p = dg::init_params(arch, rng);
    for (double& v : p.b1.values) v = rng.normal(0.0, 0.1);
    for (double& v : p.b2.values) v = rng.normal(0.0, 0.1);
    for (double& v : p.class_emb.values) v = rng.normal(0.0, 0.5);
    for (double& v : p.time_emb.values) v = rng.normal(0.0, 0.5);
    return p;
}

// Straight-line evaluation written from the layer definition, no caching.
dg::Point2 reference_forward(const dg::ModelParams& p, dg::Point2 x, std::size_t t, std::size_t c) {
    std::vector<double> in{x.x, x.y};
    for (std::size_t k = 0; k < p.arch.time_emb_dim; ++k) in.push_back(p.time_emb(t, k));
    for (std::size_t k = 0; k < p.arch.class_emb_dim; ++k) in.push_back(p.class_emb(c, k));
    double ox = p.b2.values[0], oy = p.b2.values[1];
    for (std::size_t j = 0; j < p.arch.hidden; ++j) {
        double h = p.b1.values[j];
        for (std::size_t k = 0; k < in.size(); ++k) h += p.w1(j, k) * in[k];
        h = std::max(h, 0.0);
        ox += p.w2(0, j) * h;
        oy += p.w2(1, j) * h;
    }
    return {ox, oy};
}

}  // namespace

TEST(Init, ShapesAndCount) {
    dg::Rng rng(1);
    const dg::ModelParams p = dg::init_params({}, rng);
    EXPECT_EQ(p.w1.rows, 128u);
    EXPECT_EQ(p.w1.cols, 34u);
    EXPECT_EQ(p.w2.rows, 2u);
    EXPECT_EQ(p.w2.cols, 128u);
    EXPECT_EQ(p.class_emb.rows, 6u);
    EXPECT_EQ(p.time_emb.rows, 100u);
    EXPECT_EQ(p.count(), 128u * 34 + 128 + 2 * 128 + 2 + 6 * 16 + 100 * 16);
}

TEST(Init, RangesAndZeroBiases) {
    dg::Rng rng(7);
    const dg::ModelParams p = dg::init_params({}, rng);
    const double b1 = 1.0 / std::sqrt(34.0);
    for (double v : p.w1.values) EXPECT_LE(std::abs(v), b1);
    for (double v : p.w2.values) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(128.0));
    for (double v : p.b1.values) EXPECT_EQ(v, 0.0);
    for (double v : p.b2.values) EXPECT_EQ(v, 0.0);
    double ss = 0.0;
    for (double v : p.time_emb.values) ss += v * v;
    EXPECT_NEAR(std::sqrt(ss / p.time_emb.size()), 0.02, 0.002);
}

TEST(Init, Deterministic) {
    dg::Rng a(42), b(42), c(43);
    const auto pa = dg::init_params({}, a);
    EXPECT_EQ(pa, dg::init_params({}, b));
    EXPECT_NE(dg::params_checksum(pa), dg::params_checksum(dg::init_params({}, c)));
}

TEST(Init, RejectsDegenerateArch) {
    dg::Arch a;
    a.hidden = 0;
    dg::Rng rng(1);
    EXPECT_THROW(dg::init_params(a, rng), dg::ConfigError);
}

TEST(Forward, ZeroNetworkGivesZero) {
    const dg::ModelParams p(dg::Arch{});
    EXPECT_EQ(dg::predict(p, {3.0, -1.0}, 5, 2), (dg::Point2{0.0, 0.0}));
}

TEST(Forward, OutputBiasPassesThrough) {
    dg::ModelParams p(dg::Arch{});
    p.b2.values = {0.25, -1.5};
    EXPECT_EQ(dg::predict(p, {9.0, 9.0}, 99, 5), (dg::Point2{0.25, -1.5}));
}

TEST(Forward, MatchesReferenceEvaluation) {
    const auto p = random_params(3);
    dg::Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const dg::Point2 x{rng.normal(0, 3), rng.normal(0, 3)};
        const std::size_t t = rng.uniform_index(100), c = rng.uniform_index(6);
        const dg::Point2 got = dg::predict(p, x, t, c);
        const dg::Point2 want = reference_forward(p, x, t, c);
        EXPECT_NEAR(got.x, want.x, 1e-12);
        EXPECT_NEAR(got.y, want.y, 1e-12);
    }
}

TEST(Forward, RejectsOutOfRangeIndices) {
    const dg::ModelParams p(dg::Arch{});
    EXPECT_THROW(dg::predict(p, {}, 100, 0), dg::InputError);
    EXPECT_THROW(dg::predict(p, {}, 0, 6), dg::InputError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradient) {
    const auto p = random_params(5);
    dg::Cache cache;
    dg::forward(p, {1.0, 2.0}, 10, 1, cache);
    const dg::Gradients g = dg::backward(p, cache, {0.0, 0.0});
    EXPECT_EQ(g, dg::Gradients(p.arch));
}

TEST(Backward, OutputBiasGradientIsUpstream) {
    const auto p = random_params(5);
    dg::Cache cache;
    dg::forward(p, {1.0, 2.0}, 10, 1, cache);
    const dg::Gradients g = dg::backward(p, cache, {0.3, -0.7});
    EXPECT_EQ(g.b2.values[0], 0.3);
    EXPECT_EQ(g.b2.values[1], -0.7);
}

TEST(Backward, LinearInUpstream) {
    const auto p = random_params(6);
    dg::Cache cache;
    dg::forward(p, {-1.0, 0.5}, 40, 3, cache);
    const auto ga = dg::flatten(dg::backward(p, cache, {1.0, 0.0}));
    const auto gb = dg::flatten(dg::backward(p, cache, {0.0, 1.0}));
    const auto gab = dg::flatten(dg::backward(p, cache, {2.0, -3.0}));
    for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_NEAR(gab[i], 2.0 * ga[i] - 3.0 * gb[i], 1e-10);
}

TEST(Backward, ReluSubgradientAtZeroIsZero) {
    dg::ModelParams p(dg::Arch{});
    for (double& v : p.w2.values) v = 1.0;
    dg::Cache cache;
    dg::forward(p, {0.0, 0.0}, 0, 0, cache);  // every pre-activation is exactly 0
    const dg::Gradients g = dg::backward(p, cache, {1.0, 1.0});
    for (double v : g.b1.values) EXPECT_EQ(v, 0.0);
    for (double v : g.w1.values) EXPECT_EQ(v, 0.0);
}

TEST(Backward, AgreesWithFiniteDifferencesPerEntry) {
    const auto p = random_params(8);
    const dg::Point2 x{0.7, -1.2};
    const dg::Point2 d{0.4, -0.9};
    dg::Cache cache;
    dg::forward(p, x, 17, 4, cache);
    const auto g = dg::flatten(dg::backward(p, cache, d));
    auto f = [&](const dg::ModelParams& q) {
        const auto e = dg::predict(q, x, 17, 4);
        return d.x * e.x + d.y * e.y;
    };
    dg::ModelParams work = p;
    std::size_t offset = 0;
    work.for_each([&](std::string_view, dg::Tensor& t) {
        for (std::size_t i = 0; i < t.size(); i += 7) {
            const double saved = t.values[i];
            t.values[i] = saved + 1e-6;
            const double up = f(work);
            t.values[i] = saved - 1e-6;
            const double down = f(work);
            t.values[i] = saved;
            EXPECT_NEAR(g[offset + i], (up - down) / 2e-6, 1e-6);
        }
        offset += t.size();
    });
}

TEST(Adam, ZeroGradientLeavesParameters) {
    auto p = random_params(2);
    const auto before = p;
    dg::AdamState st(p.arch);
    dg::adam_step(p, dg::Gradients(p.arch), st, 0.1);
    EXPECT_EQ(p, before);
    EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    dg::ModelParams p(dg::Arch{});
    dg::Gradients g(p.arch);
    g.b2.values = {5.0, -0.01};
    dg::AdamState st(p.arch);
    dg::adam_step(p, g, st, 0.1);
    EXPECT_NEAR(p.b2.values[0], -0.1, 1e-6);
    EXPECT_NEAR(p.b2.values[1], 0.1, 1e-4);
}

TEST(Adam, Deterministic) {
    auto a = random_params(4), b = random_params(4);
    dg::Gradients g(a.arch);
    dg::Rng rng(1);
    for (double& v : g.w1.values) v = rng.normal();
    dg::AdamState sa(a.arch), sb(b.arch);
    for (int i = 0; i < 5; ++i) {
        dg::adam_step(a, g, sa, 1e-3);
        dg::adam_step(b, g, sb, 1e-3);
    }
    EXPECT_EQ(a, b);
    EXPECT_EQ(sa, sb);
}

TEST(Adam, NonFiniteGradientNamesTensor) {
    auto p = random_params(4);
    const auto before = p;
    dg::Gradients g(p.arch);
    g.time_emb.values[3] = std::nan("");
    dg::AdamState st(p.arch);
    try {
        dg::adam_step(p, g, st, 1e-3);
        FAIL() << "expected DivergenceError";
    } catch (const dg::DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("time_emb"), std::string::npos);
        EXPECT_EQ(e.exit_code(), dg::ExitCode::RuntimeFailure);
    }
    EXPECT_EQ(p, before);
}

TEST(GradCheck, AnalyticGradientPasses) {
    dg::Rng rng(99);
    const auto p = random_params(10);
    const auto probes = dg::random_probes(p.arch, 4, rng);
    const auto r = dg::grad_check(p, probes);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_tensor;
    EXPECT_EQ(r.per_tensor.size(), 6u);
}

TEST(GradCheck, DetectsScaledGradient) {
    dg::Rng rng(99);
    const auto p = random_params(10);
    const auto probes = dg::random_probes(p.arch, 4, rng);
    auto mutated = [](const dg::ModelParams& q, std::span<const dg::Probe> pr) {
        dg::Gradients g = dg::probe_gradient(q, pr);
        for (double& v : g.w2.values) v *= 2.0;
        return g;
    };
    const auto r = dg::grad_check(p, probes, mutated);
    EXPECT_EQ(r.worst_tensor, "w2");
    EXPECT_NEAR(r.for_tensor("w2"), 1.0, 1e-3);
    EXPECT_LT(r.for_tensor("w1"), 1e-4);
}

TEST(GradCheck, ZeroNetworkHasNoError) {
    dg::Rng rng(3);
    const dg::ModelParams p(dg::Arch{});
    const auto probes = dg::random_probes(p.arch, 2, rng);
    EXPECT_LT(dg::grad_check(p, probes).max_rel_error, 1e-6);
}

TEST(Checksum, FnvKnownVectors) {
    EXPECT_EQ(dg::fnv1a64(std::string_view("")), 0xcbf29ce484222325ULL);
    EXPECT_EQ(dg::fnv1a64(std::string_view("a")), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(dg::fnv1a64(std::string_view("foobar")), 0x85944171f73967e8ULL);
}
