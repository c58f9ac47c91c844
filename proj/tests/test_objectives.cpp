// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "driftguard/objectives.hpp"

namespace dg = driftguard;

namespace {

dg::ModelParams params(std::uint64_t seed) {
    dg::Rng rng(seed);
    auto p = dg::init_params({}, rng);
    for (double& v : p.b1.values) v = rng.normal(0.0, 0.1);
    for (double& v : p.class_emb.values) v = rng.normal(0.0, 0.5);
    for (double& v : p.time_emb.values) v = rng.normal(0.0, 0.5);
    return p;
}

std::vector<dg::LabeledPoint> batch(std::size_t n, std::uint64_t seed) {
    dg::Rng rng(seed);
    std::vector<dg::LabeledPoint> b(n);
    for (auto& it : b) it = {{rng.normal(0, 3), rng.normal(0, 3)}, rng.uniform_index(6)};
    return b;
}

// Every entry of `b` shifted by `d`.
dg::ModelParams shifted(dg::ModelParams b, double d) {
    b.for_each([d](std::string_view, dg::Tensor& t) {
        for (double& v : t.values) v += d;
    });
    return b;
}

template <class F>
void expect_gradient_matches(const dg::ModelParams& p, const dg::Gradients& g, F&& f, double tol, std::size_t stride) {
    dg::ModelParams work = p;
    const auto flat = dg::flatten(g);
    std::size_t offset = 0;
    work.for_each([&](std::string_view name, dg::Tensor& t) {
        for (std::size_t i = 0; i < t.size(); i += stride) {
            const double saved = t.values[i];
            t.values[i] = saved + 1e-6;
            const double up = f(work);
            t.values[i] = saved - 1e-6;
            const double down = f(work);
            t.values[i] = saved;
            EXPECT_NEAR(flat[offset + i], (up - down) / 2e-6, tol) << name << "[" << i << "]";
        }
        offset += t.size();
    });
}

}  // namespace

TEST(Denoise, ZeroNetworkLossIsNoiseEnergy) {
    const dg::ModelParams p(dg::Arch{});
    const auto s = dg::cosine_schedule(100);
    dg::Rng rng(2);
    const auto v = dg::denoise_loss(p, batch(10000, 1), s, rng);
    EXPECT_NEAR(v.loss.denoise, 2.0, 0.1);
    EXPECT_EQ(v.loss.total, v.loss.denoise);
}

TEST(Denoise, GradientMatchesFiniteDifferences) {
    const auto p = params(3);
    const auto s = dg::cosine_schedule(100);
    const auto b = batch(8, 4);
    dg::Rng rng(5);
    const auto v = dg::denoise_loss(p, b, s, rng);
    expect_gradient_matches(p, v.grads, [&](const dg::ModelParams& q) {
        dg::Rng r(5);
        return dg::denoise_loss(q, b, s, r).loss.total;
    }, 1e-6, 5);
}

TEST(Denoise, RejectsBadInputs) {
    const dg::ModelParams p(dg::Arch{});
    dg::Rng rng(1);
    EXPECT_THROW(dg::denoise_loss(p, {}, dg::cosine_schedule(100), rng), dg::InputError);
    EXPECT_THROW(dg::denoise_loss(p, batch(2, 1), dg::cosine_schedule(50), rng), dg::InputError);
}

TEST(Distance, NormArithmetic) {
    const dg::ModelParams base(dg::Arch{});
    dg::ModelParams per = base;
    per.b2.values = {1.0, 1.0};
    per.w1.values[0] = 1.0;
    // Entries: one 1 in w1, two 1s in b2.
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l1), 3.0);
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l2_squared), 3.0);
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l2), 1.0 + std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(dg::flat_l2_distance(per, base), std::sqrt(3.0));
    per.b2.values = {3.0, 0.0};
    per.w1.values[0] = 0.0;
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l1), 3.0);
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l2), 3.0);
    EXPECT_DOUBLE_EQ(dg::param_distance(per, base, dg::NormKind::l2_squared), 9.0);
}

TEST(Distance, FlatNormOracle) {
    const auto a = params(1), b = params(2);
    const auto fa = dg::flatten(a), fb = dg::flatten(b);
    double ss = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        ss += (fa[i] - fb[i]) * (fa[i] - fb[i]);
        s1 += std::abs(fa[i] - fb[i]);
    }
    EXPECT_NEAR(dg::flat_l2_distance(a, b), std::sqrt(ss), 1e-12);
    EXPECT_NEAR(dg::param_distance(a, b, dg::NormKind::l1), s1, 1e-9);
    EXPECT_GT(dg::param_distance(a, b, dg::NormKind::l2), dg::flat_l2_distance(a, b));
    EXPECT_EQ(dg::param_distance(a, a, dg::NormKind::l2), 0.0);
}

TEST(Distance, PenaltyGradientsMatchFiniteDifferences) {
    const auto base = params(1);
    const auto per = shifted(params(2), 0.0);
    for (auto norm : {dg::NormKind::l1, dg::NormKind::l2, dg::NormKind::l2_squared}) {
        const auto v = dg::distance_penalty(per, base, norm);
        expect_gradient_matches(per, v.grads, [&](const dg::ModelParams& q) {
            return dg::param_distance(q, base, norm);
        }, 1e-6, 3);
    }
}

TEST(Distance, PenaltyMonotoneInShift) {
    const auto base = params(4);
    double prev = 0.0;
    for (double d : {0.0, 0.01, 0.1, 0.5, 2.0}) {
        const double v = dg::distance_penalty(shifted(base, d), base, dg::NormKind::l2_squared).loss.lipschitz;
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Lipschitz, ZeroLambdaIsBitIdenticalToDenoise) {
    const auto base = params(1);
    const auto per = shifted(base, 0.01);
    const auto s = dg::cosine_schedule(100);
    const auto b = batch(32, 2);
    dg::Rng r1(7), r2(7);
    const auto plain = dg::denoise_loss(per, b, s, r1);
    const auto reg = dg::lipschitz_total(per, base, b, 0.0, dg::NormKind::l2_squared, s, r2);
    EXPECT_EQ(plain.loss, reg.loss);
    EXPECT_EQ(plain.grads, reg.grads);
    EXPECT_EQ(r1.draws(), r2.draws());
}

TEST(Lipschitz, TotalAndGradient) {
    const auto base = params(1);
    const auto per = shifted(base, 0.02);
    const auto s = dg::cosine_schedule(100);
    const auto b = batch(8, 2);
    const double lam = 3.0;
    dg::Rng r(7);
    const auto v = dg::lipschitz_total(per, base, b, lam, dg::NormKind::l2_squared, s, r);
    EXPECT_NEAR(v.loss.total, v.loss.denoise + lam * v.loss.lipschitz, 1e-12);
    EXPECT_NEAR(v.loss.lipschitz, 0.0004 * per.count(), 1e-9);
    expect_gradient_matches(per, v.grads, [&](const dg::ModelParams& q) {
        dg::Rng rr(7);
        return dg::lipschitz_total(q, base, b, lam, dg::NormKind::l2_squared, s, rr).loss.total;
    }, 1e-6, 11);
    EXPECT_THROW(dg::lipschitz_total(per, base, b, -1.0, dg::NormKind::l2, s, r), dg::InputError);
}

TEST(Prior, WeightedSumOfTwoDenoiseTerms) {
    const auto p = params(3);
    const auto s = dg::cosine_schedule(100);
    const auto b = batch(16, 9);
    // Same batch and same stream state for both terms: total = (1 + w) * denoise.
    dg::Rng ta(4), pa(4);
    const auto v = dg::prior_preservation_total(p, b, b, 100.0, s, ta, pa);
    EXPECT_NEAR(v.loss.total, 101.0 * v.loss.denoise, 1e-10 * v.loss.total);
    EXPECT_EQ(v.loss.prior, v.loss.denoise);
    dg::Rng ref(4);
    const auto g = dg::denoise_loss(p, b, s, ref).grads;
    const auto fg = dg::flatten(g), fv = dg::flatten(v.grads);
    for (std::size_t i = 0; i < fg.size(); ++i) EXPECT_NEAR(fv[i], 101.0 * fg[i], 1e-10 * (1.0 + std::abs(fv[i])));
}

TEST(Prior, ZeroWeightIsPlainDenoise) {
    const auto p = params(3);
    const auto s = dg::cosine_schedule(100);
    const auto b = batch(16, 9);
    dg::Rng r1(4), r2(4);
    const auto plain = dg::denoise_loss(p, b, s, r1);
    const auto v = dg::prior_preservation_total(p, b, b, 0.0, s, r2);
    EXPECT_EQ(plain.loss, v.loss);
}

TEST(Norm, ParseAndPrint) {
    for (auto n : {dg::NormKind::l1, dg::NormKind::l2, dg::NormKind::l2_squared}) {
        EXPECT_EQ(dg::parse_norm(dg::to_string(n)), n);
    }
    EXPECT_EQ(dg::to_string(dg::NormKind::l2_squared), "l2sq");
    EXPECT_FALSE(dg::parse_norm("linf"));
}
