// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/schedule.hpp"

namespace driftguard {

inline void check_schedule_matches(const Arch& arch, const NoiseSchedule& sched) {
    if (arch.timesteps != sched.T) {
        throw InputError("model has " + std::to_string(arch.timesteps) + " timesteps, schedule has " +
                         std::to_string(sched.T));
    }
}

/// DDPM ancestral sampling for class `c`. Each chain starts from N(0, I) at
/// t = T-1 and takes x <- (x - beta_t / sqrt(1 - ab_t) eps_hat) / sqrt(alpha_t),
/// adding sigma_t z for every t > 0.
inline std::vector<Point2> ancestral_sample(const ModelParams& params, std::size_t c, std::size_t n,
                                            const NoiseSchedule& sched, Rng& rng) {
    check_schedule_matches(params.arch, sched);
    if (c >= params.arch.num_classes) {
        throw InputError("class " + std::to_string(c) + " out of range [0, " +
                         std::to_string(params.arch.num_classes) + ")");
    }
    std::vector<double> eps_coef(sched.T);
    std::vector<double> inv_sqrt_alpha(sched.T);
    for (std::size_t t = 0; t < sched.T; ++t) {
        eps_coef[t] = sched.beta[t] / std::sqrt(1.0 - sched.alpha_bar[t]);
        inv_sqrt_alpha[t] = 1.0 / std::sqrt(sched.alpha[t]);
    }

    std::vector<Point2> out;
    out.reserve(n);
    Cache cache;
    for (std::size_t i = 0; i < n; ++i) {
        Point2 x{rng.normal(), rng.normal()};
        for (std::size_t step = sched.T; step-- > 0;) {
            const Point2 eps_hat = forward(params, x, step, c, cache);
            x = inv_sqrt_alpha[step] * (x - eps_coef[step] * eps_hat);
            if (step > 0) {
                x.x += sched.sigma[step] * rng.normal();
                x.y += sched.sigma[step] * rng.normal();
            }
            if (!std::isfinite(x.x) || !std::isfinite(x.y)) {
                throw DivergenceError("sampler produced a non-finite state at t=" + std::to_string(step) +
                                      " (class " + std::to_string(c) + ")");
            }
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace driftguard
