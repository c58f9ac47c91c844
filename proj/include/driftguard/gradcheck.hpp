// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/model.hpp"

namespace driftguard {

/// One probe of the finite-difference check: the network is scored with
/// ||eps_hat(x, t, c) - target||^2.
struct Probe {
    Point2 x;
    std::size_t t = 0;
    std::size_t c = 0;
    Point2 target;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::vector<std::pair<std::string, double>> per_tensor;  // declared order

    [[nodiscard]] double for_tensor(std::string_view name) const {
        for (const auto& [n, e] : per_tensor) {
            if (n == name) return e;
        }
        return 0.0;
    }
};

inline double probe_loss(const ModelParams& p, std::span<const Probe> probes) {
    double loss = 0.0;
    Cache cache;
    for (const Probe& pr : probes) {
        loss += squared_norm(forward(p, pr.x, pr.t, pr.c, cache) - pr.target);
    }
    return loss;
}

/// Analytic gradient of probe_loss via backward().
inline Gradients probe_gradient(const ModelParams& p, std::span<const Probe> probes) {
    Gradients g(p.arch);
    Cache cache;
    for (const Probe& pr : probes) {
        const Point2 out = forward(p, pr.x, pr.t, pr.c, cache);
        accumulate_backward(p, cache, 2.0 * (out - pr.target), g);
    }
    return g;
}

/// Random probes for a given architecture: x ~ N(0, 4I), uniform t and c,
/// targets ~ N(0, I).
inline std::vector<Probe> random_probes(const Arch& arch, std::size_t n, Rng& rng) {
    std::vector<Probe> probes(n);
    for (Probe& pr : probes) {
        pr.x = {rng.normal(0.0, 2.0), rng.normal(0.0, 2.0)};
        pr.t = rng.uniform_index(arch.timesteps);
        pr.c = rng.uniform_index(arch.num_classes);
        pr.target = {rng.normal(), rng.normal()};
    }
    return probes;
}

/// Compares `gradient_fn(params, probes)` against central differences with
/// step h on every parameter entry. Relative error per entry is
/// |analytic - numeric| / (|numeric| + 1e-8).
template <class GradientFn>
GradCheckResult grad_check(const ModelParams& params, std::span<const Probe> probes,
                           GradientFn&& gradient_fn, double h = 1e-5) {
    const Gradients analytic = gradient_fn(params, probes);
    ModelParams work = params;
    GradCheckResult result;

    auto check_tensor = [&](std::string_view name, Tensor& w, const Tensor& g) {
        double worst = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w.values[i];
            w.values[i] = saved + h;
            const double up = probe_loss(work, probes);
            w.values[i] = saved - h;
            const double down = probe_loss(work, probes);
            w.values[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double rel = std::abs(g.values[i] - numeric) / (std::abs(numeric) + 1e-8);
            worst = std::max(worst, rel);
        }
        result.per_tensor.emplace_back(std::string(name), worst);
        if (result.worst_tensor.empty() || worst > result.max_rel_error) {
            result.max_rel_error = worst;
            result.worst_tensor = std::string(name);
        }
    };
    work.zip(analytic, check_tensor);
    return result;
}

inline GradCheckResult grad_check(const ModelParams& params, std::span<const Probe> probes,
                                  double h = 1e-5) {
    return grad_check(
        params, probes,
        [](const ModelParams& p, std::span<const Probe> pr) { return probe_gradient(p, pr); }, h);
}

}  // namespace driftguard
