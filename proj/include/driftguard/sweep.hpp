// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "driftguard/checksum.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/metrics.hpp"
#include "driftguard/trainer.hpp"

namespace driftguard {

struct SweepPlan {
    TrainConfig personalize;  // method forced to lipschitz; lambda and seed set per cell
    EvalConfig eval;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;
};

struct SweepCell {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    DriftReport report;
    ModelParams params;
    TrainLog log;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample std (n - 1); 0 for a single value
};

inline MeanStd mean_std(const std::vector<double>& v) {
    MeanStd m;
    if (v.empty()) return m;
    for (double x : v) m.mean += x;
    m.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return m;
}

struct LambdaSummary {
    double lambda = 0.0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    MeanStd delta_theta_l2;
    MeanStd delta_theta_l1;
    MeanStd delta_eps;
    MeanStd kl;
    MeanStd mean_coverage;
    MeanStd new_class_fit;
};

struct SweepReport {
    std::vector<SweepCell> cells;  // lambda-major, in plan order
    std::vector<LambdaSummary> per_lambda;
    std::optional<BoundSummary> bound;  // when >= 3 cells succeeded

    [[nodiscard]] std::size_t n_ok() const {
        return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const SweepCell& c) { return c.ok; }));
    }
    [[nodiscard]] std::vector<DriftReport> reports() const {
        std::vector<DriftReport> out;
        for (const SweepCell& c : cells) {
            if (c.ok) out.push_back(c.report);
        }
        return out;
    }
};

/// Per-seed inputs the sweep needs; supplied by the caller so that the CLI can
/// load checkpoints and the tests can pretrain in memory.
struct SweepInputs {
    std::function<const ModelParams&(std::uint64_t seed)> base;
    std::function<const LabeledDataset&(std::uint64_t seed)> target;
};

inline std::vector<LambdaSummary> summarize(const std::vector<SweepCell>& cells, const std::vector<double>& lambdas) {
    std::vector<LambdaSummary> out;
    for (double lam : lambdas) {
        LambdaSummary s;
        s.lambda = lam;
        std::vector<double> th2, th1, de, kl, cov, fit;
        for (const SweepCell& c : cells) {
            if (c.lambda != lam) continue;
            if (!c.ok) {
                ++s.n_failed;
                continue;
            }
            ++s.n_ok;
            th2.push_back(c.report.delta_theta_l2);
            th1.push_back(c.report.delta_theta_l1);
            de.push_back(c.report.delta_eps);
            kl.push_back(c.report.kl);
            cov.push_back(c.report.mean_coverage());
            fit.push_back(c.report.new_class_fit);
        }
        s.delta_theta_l2 = mean_std(th2);
        s.delta_theta_l1 = mean_std(th1);
        s.delta_eps = mean_std(de);
        s.kl = mean_std(kl);
        s.mean_coverage = mean_std(cov);
        s.new_class_fit = mean_std(fit);
        out.push_back(s);
    }
    return out;
}

/// Runs Lipschitz personalization and a drift report for every
/// (lambda, seed) pair. A failing cell is recorded and the rest continue.
/// Cells may run on `plan.jobs` threads; every cell owns its random streams,
/// so results do not depend on the job count. `on_cell` is called (serialized)
/// as each cell finishes.
inline SweepReport sweep(const SweepPlan& plan, const SweepInputs& inputs,
                         const std::function<void(const SweepCell&)>& on_cell = {}) {
    if (plan.lambdas.size() < 2) throw ConfigError("sweep: need at least 2 lambdas");
    if (plan.seeds.empty()) throw ConfigError("sweep: need at least 1 seed");
    const NoiseSchedule sched = cosine_schedule(plan.personalize.schedule.T, plan.personalize.schedule.offset);

    // Base samples are shared by every cell of a seed.
    std::map<std::uint64_t, std::map<std::size_t, std::vector<Point2>>> base_samples;
    std::map<std::uint64_t, std::string> seed_errors;
    for (std::uint64_t seed : plan.seeds) {
        try {
            Rng rng(derive_seed(seed, "eval-base"));
            base_samples[seed] = sample_classes(inputs.base(seed), kPentagonClasses, plan.eval.n_eval, sched, rng);
        } catch (const std::exception& e) {
            seed_errors[seed] = e.what();
        }
    }

    SweepReport report;
    for (double lam : plan.lambdas) {
        for (std::uint64_t seed : plan.seeds) {
            SweepCell c;
            c.lambda = lam;
            c.seed = seed;
            report.cells.push_back(std::move(c));
        }
    }

    std::atomic<std::size_t> next{0};
    std::mutex done_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < report.cells.size(); i = next++) {
            SweepCell& cell = report.cells[i];
            try {
                if (auto it = seed_errors.find(cell.seed); it != seed_errors.end()) throw DivergenceError(it->second);
                TrainConfig cfg = plan.personalize;
                cfg.method = Method::lipschitz;
                cfg.lambda = cell.lambda;
                cfg.seed = cell.seed;
                const ModelParams& base = inputs.base(cell.seed);
                TrainResult res = personalize(cfg, base, inputs.target(cell.seed));
                EvalConfig ec = plan.eval;
                ec.lambda = cell.lambda;
                ec.seed = cell.seed;
                ec.method = std::string(to_string(Method::lipschitz));
                Rng eval_rng(derive_seed(cell.seed, "eval"));
                cell.report = make_drift_report(base, res.params, base_samples.at(cell.seed), sched, ec, eval_rng);
                cell.params = std::move(res.params);
                cell.log = std::move(res.log);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.ok = false;
                cell.error = e.what();
            }
            if (on_cell) {
                std::lock_guard lock(done_mutex);
                on_cell(cell);
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(plan.jobs, report.cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    report.per_lambda = summarize(report.cells, plan.lambdas);
    const auto ok = report.reports();
    if (ok.size() >= 3) report.bound = bound_check(ok);
    return report;
}

}  // namespace driftguard
