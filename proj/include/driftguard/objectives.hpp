// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: plain denoising, prior preservation, and the
// parameter-distance (Lipschitz) regularized total.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/schedule.hpp"

namespace driftguard {

struct LabeledPoint {
    Point2 x;
    std::size_t c = 0;
};

struct LossBreakdown {
    double denoise = 0.0;
    double prior = 0.0;
    double lipschitz = 0.0;
    double total = 0.0;
    double lambda = 0.0;
    double prior_weight = 0.0;

    friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

struct ObjectiveValue {
    LossBreakdown loss;
    Gradients grads;
};

enum class NormKind { l1, l2, l2_squared };

inline std::string_view to_string(NormKind n) {
    switch (n) {
        case NormKind::l1: return "l1";
        case NormKind::l2: return "l2";
        case NormKind::l2_squared: return "l2sq";
    }
    return "?";
}

inline std::optional<NormKind> parse_norm(std::string_view s) {
    if (s == "l1") return NormKind::l1;
    if (s == "l2") return NormKind::l2;
    if (s == "l2sq" || s == "l2_squared") return NormKind::l2_squared;
    return std::nullopt;
}

/// Mean over the batch of ||eps - eps_hat(x_t, c, t)||^2, with a fresh t and
/// eps drawn per item (t first, then eps.x, eps.y).
inline ObjectiveValue denoise_loss(const ModelParams& params, std::span<const LabeledPoint> batch,
                                   const NoiseSchedule& sched, Rng& rng) {
    if (batch.empty()) throw InputError("denoise_loss: empty batch");
    if (params.arch.timesteps != sched.T) throw InputError("denoise_loss: schedule length mismatch");
    ObjectiveValue out{{}, Gradients(params.arch)};
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Cache cache;
    double sum = 0.0;
    for (const LabeledPoint& item : batch) {
        const std::size_t t = rng.uniform_index(sched.T);
        const double ex = rng.normal();
        const double ey = rng.normal();
        const Point2 eps{ex, ey};
        const Point2 x_t = forward_diffuse(item.x, t, eps, sched);
        const Point2 eps_hat = forward(params, x_t, t, item.c, cache);
        const Point2 resid = eps_hat - eps;
        sum += squared_norm(resid);
        accumulate_backward(params, cache, (2.0 * inv_n) * resid, out.grads);
    }
    out.loss.denoise = sum * inv_n;
    out.loss.total = out.loss.denoise;
    return out;
}

/// Sum over parameter tensors of the chosen norm of (a - b). For l2 the root
/// is taken per tensor, so it differs from the flat-vector l2 norm.
template <class TagA, class TagB>
double param_distance(const ParamSet<TagA>& a, const ParamSet<TagB>& b, NormKind norm) {
    if (!a.congruent(b)) throw InputError("param_distance: architectures differ");
    double total = 0.0;
    a.zip(b, [&](std::string_view, const Tensor& x, const Tensor& y) {
        double acc = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x.values[i] - y.values[i];
            acc += norm == NormKind::l1 ? std::abs(d) : d * d;
        }
        total += norm == NormKind::l2 ? std::sqrt(acc) : acc;
    });
    return total;
}

/// Euclidean norm of the flattened difference, sqrt(sum_i ||a_i - b_i||^2).
template <class TagA, class TagB>
double flat_l2_distance(const ParamSet<TagA>& a, const ParamSet<TagB>& b) {
    return std::sqrt(param_distance(a, b, NormKind::l2_squared));
}

/// Value and gradient (with respect to `per`) of param_distance(per, base).
/// Non-differentiable points (a zero entry for l1, a zero tensor for l2) get
/// gradient zero.
inline ObjectiveValue distance_penalty(const ModelParams& per, const ModelParams& base, NormKind norm) {
    if (!per.congruent(base)) throw InputError("distance_penalty: architectures differ");
    ObjectiveValue out{{}, Gradients(per.arch)};
    out.loss.lipschitz = param_distance(per, base, norm);
    auto grad_of = [norm](Tensor& g, const Tensor& p, const Tensor& q) {
        double tensor_norm = 0.0;
        if (norm == NormKind::l2) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double d = p.values[i] - q.values[i];
                tensor_norm += d * d;
            }
            tensor_norm = std::sqrt(tensor_norm);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double d = p.values[i] - q.values[i];
            switch (norm) {
                case NormKind::l2_squared: g.values[i] = 2.0 * d; break;
                case NormKind::l1: g.values[i] = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); break;
                case NormKind::l2: g.values[i] = tensor_norm > 0.0 ? d / tensor_norm : 0.0; break;
            }
        }
    };
    grad_of(out.grads.w1, per.w1, base.w1);
    grad_of(out.grads.b1, per.b1, base.b1);
    grad_of(out.grads.w2, per.w2, base.w2);
    grad_of(out.grads.b2, per.b2, base.b2);
    grad_of(out.grads.class_emb, per.class_emb, base.class_emb);
    grad_of(out.grads.time_emb, per.time_emb, base.time_emb);
    out.loss.total = out.loss.lipschitz;
    return out;
}

/// denoise_loss(per) + lambda * param_distance(per, base). `base` is read only.
/// With lambda == 0 the regularizer is not evaluated, so the result is exactly
/// the plain denoising objective.
inline ObjectiveValue lipschitz_total(const ModelParams& per, const ModelParams& base,
                                      std::span<const LabeledPoint> batch, double lambda, NormKind norm,
                                      const NoiseSchedule& sched, Rng& rng) {
    if (!per.congruent(base)) throw InputError("lipschitz_total: architectures differ");
    if (!(lambda >= 0.0)) throw InputError("lipschitz_total: lambda must be >= 0");
    ObjectiveValue out = denoise_loss(per, batch, sched, rng);
    if (lambda == 0.0) return out;
    const ObjectiveValue reg = distance_penalty(per, base, norm);
    axpy(out.grads, lambda, reg.grads);
    out.loss.lipschitz = reg.loss.lipschitz;
    out.loss.lambda = lambda;
    out.loss.total = out.loss.denoise + lambda * out.loss.lipschitz;
    return out;
}

/// denoise(target) + prior_weight * denoise(prior), each batch with its own
/// random stream.
inline ObjectiveValue prior_preservation_total(const ModelParams& params,
                                               std::span<const LabeledPoint> target,
                                               std::span<const LabeledPoint> prior, double prior_weight,
                                               const NoiseSchedule& sched, Rng& target_rng, Rng& prior_rng) {
    if (target.empty() || prior.empty()) throw InputError("prior_preservation_total: empty batch");
    if (!(prior_weight >= 0.0)) throw InputError("prior_preservation_total: prior_weight must be >= 0");
    ObjectiveValue out = denoise_loss(params, target, sched, target_rng);
    if (prior_weight == 0.0) return out;
    const ObjectiveValue pri = denoise_loss(params, prior, sched, prior_rng);
    axpy(out.grads, prior_weight, pri.grads);
    out.loss.prior = pri.loss.denoise;
    out.loss.prior_weight = prior_weight;
    out.loss.total = out.loss.denoise + prior_weight * out.loss.prior;
    return out;
}

/// Single-stream form: the target batch consumes draws first, then the prior.
inline ObjectiveValue prior_preservation_total(const ModelParams& params,
                                               std::span<const LabeledPoint> target,
                                               std::span<const LabeledPoint> prior, double prior_weight,
                                               const NoiseSchedule& sched, Rng& rng) {
    return prior_preservation_total(params, target, prior, prior_weight, sched, rng, rng);
}

}  // namespace driftguard
