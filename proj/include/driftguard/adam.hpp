// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"

namespace driftguard {

struct AdamState {
    struct MomentTag {};
    using Moments = ParamSet<MomentTag>;

    Moments first;
    Moments second;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    explicit AdamState(const Arch& arch) : first(arch), second(arch) {}

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam update, in place. Gradients are checked for
/// finiteness before anything is modified.
inline void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr) {
    if (!params.congruent(grads) || !params.congruent(state.first)) {
        throw InputError("adam_step: parameter, gradient and moment shapes differ");
    }
    grads.for_each([](std::string_view name, const Tensor& g) {
        for (double v : g.values) {
            if (!std::isfinite(v)) {
                throw DivergenceError("non-finite gradient in tensor '" + std::string(name) + "'");
            }
        }
    });

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double eps = state.epsilon;

    auto update = [&](Tensor& w, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g.values[i];
            m.values[i] = b1 * m.values[i] + (1.0 - b1) * gi;
            v.values[i] = b2 * v.values[i] + (1.0 - b2) * gi * gi;
            const double m_hat = m.values[i] / c1;
            const double v_hat = v.values[i] / c2;
            w.values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    };
    update(params.w1, grads.w1, state.first.w1, state.second.w1);
    update(params.b1, grads.b1, state.first.b1, state.second.b1);
    update(params.w2, grads.w2, state.first.w2, state.second.w2);
    update(params.b2, grads.b2, state.first.b2, state.second.b2);
    update(params.class_emb, grads.class_emb, state.first.class_emb, state.second.class_emb);
    update(params.time_emb, grads.time_emb, state.first.time_emb, state.second.time_emb);
}

}  // namespace driftguard
