// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Cosine noise schedule and the closed-form forward (noising) process.
// Timesteps are 0-based: index i is diffusion step i + 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"

namespace driftguard {

struct NoiseSchedule {
    std::size_t T = 0;
    double offset = 0.008;
    std::vector<double> alpha_bar;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> sigma;  // ancestral posterior std, sigma[0] = 0

    /// sqrt(1 - alpha_bar[t]), the std of the injected noise at step t.
    [[nodiscard]] double noise_std(std::size_t t) const { return std::sqrt(1.0 - alpha_bar.at(t)); }
};

/// Cosine noise schedule. beta is clipped to [1e-8, 0.999] and
/// alpha_bar is the running product of the clipped alphas.
inline NoiseSchedule cosine_schedule(std::size_t T, double s = 0.008) {
    if (T < 2) throw ConfigError("cosine_schedule: T must be >= 2, got " + std::to_string(T));
    if (!(s > 0.0)) throw ConfigError("cosine_schedule: offset s must be > 0");
    auto f = [T, s](double t) {
        const double c = std::cos(((t / static_cast<double>(T) + s) / (1.0 + s)) * std::numbers::pi / 2.0);
        return c * c;
    };
    NoiseSchedule sched;
    sched.T = T;
    sched.offset = s;
    sched.alpha_bar.resize(T);
    sched.beta.resize(T);
    sched.alpha.resize(T);
    sched.sigma.resize(T);
    double running = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        const double raw = 1.0 - f(static_cast<double>(i + 1)) / f(static_cast<double>(i));
        sched.beta[i] = std::clamp(raw, 1e-8, 0.999);
        sched.alpha[i] = 1.0 - sched.beta[i];
        running *= sched.alpha[i];
        sched.alpha_bar[i] = running;
    }
    for (std::size_t i = 0; i < T; ++i) {
        if (i == 0) {
            sched.sigma[i] = 0.0;
            continue;
        }
        const double posterior_var =
            sched.beta[i] * (1.0 - sched.alpha_bar[i - 1]) / (1.0 - sched.alpha_bar[i]);
        sched.sigma[i] = std::sqrt(posterior_var);
    }
    return sched;
}

inline void check_timestep(const NoiseSchedule& sched, std::size_t t) {
    if (t >= sched.T) {
        throw InputError("timestep " + std::to_string(t) + " out of range [0, " + std::to_string(sched.T) +
                         ")");
    }
}

/// x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
inline Point2 forward_diffuse(Point2 x0, std::size_t t, Point2 eps, const NoiseSchedule& sched) {
    check_timestep(sched, t);
    const double a = std::sqrt(sched.alpha_bar[t]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t]);
    return {a * x0.x + b * eps.x, a * x0.y + b * eps.y};
}

/// Tweedie: score = -eps_hat / sqrt(1 - alpha_bar_t).
inline Point2 score_from_eps(Point2 eps_hat, std::size_t t, const NoiseSchedule& sched) {
    check_timestep(sched, t);
    const double sd = sched.noise_std(t);
    if (!(sd > 0.0)) {
        throw InputError("score_from_eps: alpha_bar[" + std::to_string(t) + "] == 1, noise scale is zero");
    }
    return {-eps_hat.x / sd, -eps_hat.y / sd};
}

}  // namespace driftguard
