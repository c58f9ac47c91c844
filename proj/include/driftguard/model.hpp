// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// One-hidden-layer conditional noise predictor with hand-written backprop.
//
//   in      = [x, time_emb[t], class_emb[c]]           (2 + Dt + Dc)
//   pre     = w1 * in + b1                              (hidden)
//   act     = relu(pre)
//   eps_hat = w2 * act + b2                             (2)

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend bool operator==(const Point2&, const Point2&) = default;
};

inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double squared_norm(Point2 p) { return p.x * p.x + p.y * p.y; }

/// Row-major dense matrix; vectors are stored as rows x 1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double* row(std::size_t r) { return values.data() + r * cols; }
    const double* row(std::size_t r) const { return values.data() + r * cols; }
    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] bool same_shape(const Tensor& o) const noexcept {
        return rows == o.rows && cols == o.cols;
    }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Architecture descriptor. input_dim is the data dimension (always 2); the
/// first layer sees data_dim + class_emb_dim + time_emb_dim inputs.
struct Arch {
    std::size_t input_dim = 2;
    std::size_t hidden = 128;
    std::size_t class_emb_dim = 16;
    std::size_t time_emb_dim = 16;
    std::size_t num_classes = 6;
    std::size_t timesteps = 100;

    [[nodiscard]] std::size_t layer_input_dim() const noexcept {
        return input_dim + class_emb_dim + time_emb_dim;
    }
    static constexpr std::size_t output_dim = 2;

    friend bool operator==(const Arch&, const Arch&) = default;

    void validate() const {
        if (input_dim != 2) throw ConfigError("arch: input_dim must be 2");
        if (hidden < 1) throw ConfigError("arch: hidden must be >= 1");
        if (num_classes < 1) throw ConfigError("arch: num_classes must be >= 1");
        if (timesteps < 1) throw ConfigError("arch: timesteps must be >= 1");
    }
};

/// Named parameter tensors in their declared (and serialized) order. The tag
/// separates weights from gradients at the type level.
template <class Tag>
struct ParamSet {
    Arch arch;
    Tensor w1;         // hidden x layer_input_dim
    Tensor b1;         // hidden
    Tensor w2;         // 2 x hidden
    Tensor b2;         // 2
    Tensor class_emb;  // num_classes x class_emb_dim
    Tensor time_emb;   // timesteps x time_emb_dim

    static constexpr std::array<std::string_view, 6> names = {"w1", "b1", "w2", "b2", "class_emb",
                                                              "time_emb"};

    ParamSet() = default;

    /// Zero-filled tensors with the shapes implied by the architecture.
    explicit ParamSet(const Arch& a)
        : arch(a),
          w1(a.hidden, a.layer_input_dim()),
          b1(a.hidden, 1),
          w2(Arch::output_dim, a.hidden),
          b2(Arch::output_dim, 1),
          class_emb(a.num_classes, a.class_emb_dim),
          time_emb(a.timesteps, a.time_emb_dim) {}

    template <class F>
    void for_each(F&& f) {
        f(names[0], w1);
        f(names[1], b1);
        f(names[2], w2);
        f(names[3], b2);
        f(names[4], class_emb);
        f(names[5], time_emb);
    }
    template <class F>
    void for_each(F&& f) const {
        f(names[0], w1);
        f(names[1], b1);
        f(names[2], w2);
        f(names[3], b2);
        f(names[4], class_emb);
        f(names[5], time_emb);
    }

    /// Visits matching tensors of two congruent sets.
    template <class OtherTag, class F>
    void zip(const ParamSet<OtherTag>& other, F&& f) {
        f(names[0], w1, other.w1);
        f(names[1], b1, other.b1);
        f(names[2], w2, other.w2);
        f(names[3], b2, other.b2);
        f(names[4], class_emb, other.class_emb);
        f(names[5], time_emb, other.time_emb);
    }
    template <class OtherTag, class F>
    void zip(const ParamSet<OtherTag>& other, F&& f) const {
        f(names[0], w1, other.w1);
        f(names[1], b1, other.b1);
        f(names[2], w2, other.w2);
        f(names[3], b2, other.b2);
        f(names[4], class_emb, other.class_emb);
        f(names[5], time_emb, other.time_emb);
    }

    [[nodiscard]] std::size_t count() const {
        std::size_t n = 0;
        for_each([&](std::string_view, const Tensor& t) { n += t.size(); });
        return n;
    }

    template <class OtherTag>
    [[nodiscard]] bool congruent(const ParamSet<OtherTag>& other) const {
        bool ok = arch == other.arch;
        zip(other, [&](std::string_view, const Tensor& a, const Tensor& b) {
            ok = ok && a.same_shape(b);
        });
        return ok;
    }

    [[nodiscard]] bool all_finite() const {
        bool ok = true;
        for_each([&](std::string_view, const Tensor& t) {
            ok = ok && std::all_of(t.values.begin(), t.values.end(),
                                   [](double v) { return std::isfinite(v); });
        });
        return ok;
    }

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

struct ParamsTag {};
struct GradTag {};
using ModelParams = ParamSet<ParamsTag>;
using Gradients = ParamSet<GradTag>;

/// Fills the tensors from the architecture's initialization recipe: weights
/// uniform in +-1/sqrt(fan_in), embeddings N(0, 0.02^2), biases zero.
inline ModelParams init_params(const Arch& arch, Rng& rng) {
    arch.validate();
    ModelParams p(arch);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(arch.layer_input_dim()));
    for (double& v : p.w1.values) v = rng.uniform(-bound1, bound1);
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden));
    for (double& v : p.w2.values) v = rng.uniform(-bound2, bound2);
    for (double& v : p.class_emb.values) v = rng.normal(0.0, 0.02);
    for (double& v : p.time_emb.values) v = rng.normal(0.0, 0.02);
    return p;
}

/// Activations kept by forward() for the matching backward() call.
struct Cache {
    std::vector<double> input;  // layer input (x, time row, class row)
    std::vector<double> pre;    // hidden pre-activation
    std::vector<double> act;    // relu(pre)
    std::size_t t = 0;
    std::size_t c = 0;
};

inline void check_indices(const Arch& arch, std::size_t t, std::size_t c) {
    if (t >= arch.timesteps) {
        throw InputError("timestep " + std::to_string(t) + " out of range [0, " +
                         std::to_string(arch.timesteps) + ")");
    }
    if (c >= arch.num_classes) {
        throw InputError("class " + std::to_string(c) + " out of range [0, " +
                         std::to_string(arch.num_classes) + ")");
    }
}

/// Evaluates the network, filling `cache` for a later backward pass.
inline Point2 forward(const ModelParams& p, Point2 x, std::size_t t, std::size_t c, Cache& cache) {
    const Arch& a = p.arch;
    check_indices(a, t, c);
    const std::size_t in_dim = a.layer_input_dim();
    cache.t = t;
    cache.c = c;
    cache.input.resize(in_dim);
    cache.input[0] = x.x;
    cache.input[1] = x.y;
    std::copy_n(p.time_emb.row(t), a.time_emb_dim, cache.input.begin() + 2);
    std::copy_n(p.class_emb.row(c), a.class_emb_dim, cache.input.begin() + 2 + a.time_emb_dim);

    cache.pre.resize(a.hidden);
    cache.act.resize(a.hidden);
    const double* in = cache.input.data();
    for (std::size_t j = 0; j < a.hidden; ++j) {
        const double* w = p.w1.row(j);
        double s = p.b1.values[j];
        for (std::size_t k = 0; k < in_dim; ++k) s += w[k] * in[k];
        cache.pre[j] = s;
        cache.act[j] = s > 0.0 ? s : 0.0;
    }
    Point2 out{p.b2.values[0], p.b2.values[1]};
    const double* w20 = p.w2.row(0);
    const double* w21 = p.w2.row(1);
    for (std::size_t j = 0; j < a.hidden; ++j) {
        out.x += w20[j] * cache.act[j];
        out.y += w21[j] * cache.act[j];
    }
    return out;
}

/// Convenience overload for callers that do not need the cache.
inline Point2 predict(const ModelParams& p, Point2 x, std::size_t t, std::size_t c) {
    thread_local Cache cache;
    return forward(p, x, t, c, cache);
}

/// Adds d(d_eps . eps_hat)/d(theta) into `grads`. The ReLU subgradient at
/// exactly zero is taken to be zero.
inline void accumulate_backward(const ModelParams& p, const Cache& cache, Point2 d_eps,
                                Gradients& grads) {
    const Arch& a = p.arch;
    const std::size_t in_dim = a.layer_input_dim();
    if (!(grads.arch == a) || cache.input.size() != in_dim || cache.pre.size() != a.hidden) {
        throw InternalError("backward: cache or gradient shape does not match parameters");
    }
    grads.b2.values[0] += d_eps.x;
    grads.b2.values[1] += d_eps.y;
    double* g20 = grads.w2.row(0);
    double* g21 = grads.w2.row(1);
    const double* w20 = p.w2.row(0);
    const double* w21 = p.w2.row(1);

    double* g_time = grads.time_emb.row(cache.t);
    double* g_class = grads.class_emb.row(cache.c);
    const double* in = cache.input.data();
    for (std::size_t j = 0; j < a.hidden; ++j) {
        const double act = cache.act[j];
        g20[j] += d_eps.x * act;
        g21[j] += d_eps.y * act;
        if (!(cache.pre[j] > 0.0)) continue;
        const double d_pre = d_eps.x * w20[j] + d_eps.y * w21[j];
        if (d_pre == 0.0) continue;
        grads.b1.values[j] += d_pre;
        double* gw = grads.w1.row(j);
        const double* w = p.w1.row(j);
        for (std::size_t k = 0; k < in_dim; ++k) gw[k] += d_pre * in[k];
        for (std::size_t k = 0; k < a.time_emb_dim; ++k) g_time[k] += d_pre * w[2 + k];
        for (std::size_t k = 0; k < a.class_emb_dim; ++k) {
            g_class[k] += d_pre * w[2 + a.time_emb_dim + k];
        }
    }
}

inline Gradients backward(const ModelParams& p, const Cache& cache, Point2 d_eps) {
    Gradients g(p.arch);
    accumulate_backward(p, cache, d_eps, g);
    return g;
}

/// a += s * b over every tensor.
template <class TagA, class TagB>
void axpy(ParamSet<TagA>& a, double s, const ParamSet<TagB>& b) {
    a.zip(b, [s](std::string_view, Tensor& x, const Tensor& y) {
        for (std::size_t i = 0; i < x.size(); ++i) x.values[i] += s * y.values[i];
    });
}

template <class Tag>
void scale(ParamSet<Tag>& a, double s) {
    a.for_each([s](std::string_view, Tensor& x) {
        for (double& v : x.values) v *= s;
    });
}

/// Flattens every tensor in declared order.
template <class Tag>
std::vector<double> flatten(const ParamSet<Tag>& a) {
    std::vector<double> out;
    out.reserve(a.count());
    a.for_each([&](std::string_view, const Tensor& t) {
        out.insert(out.end(), t.values.begin(), t.values.end());
    });
    return out;
}

}  // namespace driftguard
