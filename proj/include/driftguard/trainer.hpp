// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/adam.hpp"
#include "driftguard/checksum.hpp"
#include "driftguard/datagen.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/objectives.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/schedule.hpp"

namespace driftguard {

enum class Method { vanilla, prior, lipschitz };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::vanilla: return "vanilla";
        case Method::prior: return "prior";
        case Method::lipschitz: return "lipschitz";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    if (s == "vanilla") return Method::vanilla;
    if (s == "prior") return Method::prior;
    if (s == "lipschitz") return Method::lipschitz;
    return std::nullopt;
}

struct ScheduleSpec {
    std::size_t T = 100;
    double offset = 0.008;
    friend bool operator==(const ScheduleSpec&, const ScheduleSpec&) = default;
};

struct TrainConfig {
    double lr = 1e-3;
    std::size_t iterations = 1000;
    std::size_t batch_size = 64;
    double lambda = 0.0;
    double prior_weight = 0.0;
    NormKind norm = NormKind::l2_squared;
    Method method = Method::vanilla;
    std::uint64_t seed = 0;
    Arch arch;
    ScheduleSpec schedule;
    std::size_t log_interval = 50;

    void validate() const {
        arch.validate();
        if (iterations < 1) throw ConfigError("iterations must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
        if (!(prior_weight >= 0.0)) throw ConfigError("prior_weight must be >= 0");
        if (method == Method::prior && !(prior_weight > 0.0)) {
            throw ConfigError("method=prior requires prior_weight > 0");
        }
        if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
        if (log_interval < 1) throw ConfigError("log_interval must be >= 1");
        if (schedule.T != arch.timesteps) throw ConfigError("schedule T must equal arch timesteps");
    }
};

struct TrainRecord {
    std::size_t step = 0;
    LossBreakdown loss;
    double drift_l2 = 0.0;  // ||theta_per - theta_base||, personalization only
};

struct TrainLog {
    std::vector<TrainRecord> records;
    double wall_time_s = 0.0;
    std::uint64_t final_checksum = 0;
};

struct TrainResult {
    ModelParams params;
    TrainLog log;
};

namespace detail {

inline std::vector<LabeledPoint> to_labeled(const LabeledDataset& ds) {
    std::vector<LabeledPoint> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) out[i] = {ds.points[i], ds.labels[i]};
    return out;
}

inline void draw_batch(const std::vector<LabeledPoint>& pool, std::size_t n, Rng& rng,
                       std::vector<LabeledPoint>& batch) {
    batch.resize(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = pool[rng.uniform_index(pool.size())];
}

inline bool should_log(std::size_t step, std::size_t iterations, std::size_t interval) {
    return step == 1 || step % interval == 0 || step == iterations;
}

inline void check_loss(const LossBreakdown& loss, std::size_t step) {
    if (!std::isfinite(loss.total)) {
        throw DivergenceError("non-finite loss at step " + std::to_string(step));
    }
}

inline void check_labels(const LabeledDataset& ds, const Arch& arch, std::string_view what) {
    for (std::size_t label : ds.labels) {
        if (label >= arch.num_classes) {
            throw ConfigError(std::string(what) + ": label " + std::to_string(label) +
                              " exceeds num_classes " + std::to_string(arch.num_classes));
        }
    }
}

}  // namespace detail

/// Trains from a fresh initialization on `dataset` with the plain denoising
/// loss, sampling minibatches with replacement.
inline TrainResult pretrain(const TrainConfig& config, const LabeledDataset& dataset) {
    config.validate();
    if (config.method != Method::vanilla) throw ConfigError("pretrain requires method=vanilla");
    if (dataset.size() == 0) throw ConfigError("pretrain: empty dataset");
    detail::check_labels(dataset, config.arch, "pretrain");

    const auto start = std::chrono::steady_clock::now();
    const NoiseSchedule sched = cosine_schedule(config.schedule.T, config.schedule.offset);
    Rng init_rng(derive_seed(config.seed, "init"));
    Rng rng(derive_seed(config.seed, "pretrain"));

    TrainResult result{init_params(config.arch, init_rng), {}};
    AdamState adam(config.arch);
    const auto pool = detail::to_labeled(dataset);
    std::vector<LabeledPoint> batch;
    for (std::size_t step = 1; step <= config.iterations; ++step) {
        detail::draw_batch(pool, config.batch_size, rng, batch);
        const ObjectiveValue obj = denoise_loss(result.params, batch, sched, rng);
        detail::check_loss(obj.loss, step);
        adam_step(result.params, obj.grads, adam, config.lr);
        if (detail::should_log(step, config.iterations, config.log_interval)) {
            result.log.records.push_back({step, obj.loss, 0.0});
        }
    }
    result.log.final_checksum = params_checksum(result.params);
    result.log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// Finetunes a copy of `base` on `target` with the objective chosen by
/// config.method. `base` is never written. `prior` is required exactly when
/// method == prior.
inline TrainResult personalize(const TrainConfig& config, const ModelParams& base,
                               const LabeledDataset& target, const LabeledDataset* prior = nullptr) {
    config.validate();
    if (!(base.arch == config.arch)) throw ConfigError("personalize: base architecture differs from config");
    if (target.size() == 0) throw ConfigError("personalize: empty target dataset");
    if (config.method == Method::prior && (prior == nullptr || prior->size() == 0)) {
        throw ConfigError("personalize: method=prior requires prior data");
    }
    if (config.method != Method::prior && prior != nullptr) {
        throw ConfigError("personalize: prior data given but method is " + std::string(to_string(config.method)));
    }
    detail::check_labels(target, config.arch, "personalize target");
    if (prior) detail::check_labels(*prior, config.arch, "personalize prior");

    const auto start = std::chrono::steady_clock::now();
    const NoiseSchedule sched = cosine_schedule(config.schedule.T, config.schedule.offset);
    Rng rng(derive_seed(config.seed, "personalize"));

    TrainResult result{base, {}};
    AdamState adam(config.arch);
    const auto target_pool = detail::to_labeled(target);
    const auto prior_pool = prior ? detail::to_labeled(*prior) : std::vector<LabeledPoint>{};
    std::vector<LabeledPoint> batch;
    std::vector<LabeledPoint> prior_batch;
    for (std::size_t step = 1; step <= config.iterations; ++step) {
        detail::draw_batch(target_pool, config.batch_size, rng, batch);
        ObjectiveValue obj;
        switch (config.method) {
            case Method::vanilla:
                obj = denoise_loss(result.params, batch, sched, rng);
                break;
            case Method::lipschitz:
                obj = lipschitz_total(result.params, base, batch, config.lambda, config.norm, sched, rng);
                break;
            case Method::prior:
                detail::draw_batch(prior_pool, config.batch_size, rng, prior_batch);
                obj = prior_preservation_total(result.params, batch, prior_batch, config.prior_weight, sched,
                                               rng);
                break;
        }
        detail::check_loss(obj.loss, step);
        adam_step(result.params, obj.grads, adam, config.lr);
        if (detail::should_log(step, config.iterations, config.log_interval)) {
            result.log.records.push_back(
                {step, obj.loss, flat_l2_distance(result.params, base)});
        }
    }
    result.log.final_checksum = params_checksum(result.params);
    result.log.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace driftguard
