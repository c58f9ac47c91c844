// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key = value config with [section] headers. '#' starts a comment.
// Every key has a default; unknown sections or keys are errors that point at
// the offending line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/csv.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/metrics.hpp"
#include "driftguard/trainer.hpp"

namespace driftguard {

struct DataSpec {
    std::size_t n_per_class = 1000;
    double radius = 4.0;
    double std_dev = 0.5;
    std::size_t new_class_n = 1000;
    Point2 new_class_mean{0.0, 0.0};
    std::size_t new_class = 5;
    std::size_t prior_class = 0;
};

struct PhaseSpec {
    double lr = 1e-3;
    std::size_t iterations = 1000;
    std::size_t batch_size = 64;
};

struct EvalSpec {
    std::size_t n_eval = 2000;
    std::size_t knn_k = 5;
    double radius_thresh = 1.5;
    std::size_t n_probes = 512;
    std::uint64_t probe_seed = 20240917;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t log_interval = 50;
    Arch arch;
    ScheduleSpec schedule;
    DataSpec data;
    PhaseSpec pretrain{1e-3, 1000, 64};
    PhaseSpec personalize{1e-3, 5000, 64};
    Method method = Method::lipschitz;
    double lambda = 1.0;
    double prior_weight = 100.0;
    NormKind norm = NormKind::l2_squared;
    EvalSpec eval;
    std::vector<double> sweep_lambdas{0.0, 1.0, 100.0, 1000.0, 10000.0};
    std::vector<std::uint64_t> sweep_seeds{1, 2, 3};
    std::size_t jobs = 1;

    [[nodiscard]] TrainConfig pretrain_config() const {
        TrainConfig c;
        c.lr = pretrain.lr;
        c.iterations = pretrain.iterations;
        c.batch_size = pretrain.batch_size;
        c.method = Method::vanilla;
        c.seed = seed;
        c.arch = arch;
        c.schedule = schedule;
        c.log_interval = log_interval;
        return c;
    }

    [[nodiscard]] TrainConfig personalize_config() const {
        TrainConfig c;
        c.lr = personalize.lr;
        c.iterations = personalize.iterations;
        c.batch_size = personalize.batch_size;
        c.method = method;
        c.lambda = method == Method::lipschitz ? lambda : 0.0;
        c.prior_weight = method == Method::prior ? prior_weight : 0.0;
        c.norm = norm;
        c.seed = seed;
        c.arch = arch;
        c.schedule = schedule;
        c.log_interval = log_interval;
        return c;
    }

    [[nodiscard]] EvalConfig eval_config() const {
        EvalConfig e;
        e.n_eval = eval.n_eval;
        e.knn_k = eval.knn_k;
        e.radius_thresh = eval.radius_thresh;
        for (std::size_t k = 0; k < kPentagonClasses; ++k) e.class_means.push_back(pentagon_vertex(k, data.radius));
        e.new_class_mean = data.new_class_mean;
        e.new_class = data.new_class;
        e.n_probes = eval.n_probes;
        e.probe_seed = eval.probe_seed;
        e.seed = seed;
        e.lambda = method == Method::lipschitz ? lambda : 0.0;
        e.method = std::string(to_string(method));
        return e;
    }

    /// Pretraining data: five pentagon classes from the run seed.
    [[nodiscard]] LabeledDataset pretrain_data(std::uint64_t data_seed) const {
        Rng rng(derive_seed(data_seed, "pretrain-data"));
        return pentagon_dataset(data.n_per_class, data.radius, data.std_dev, rng);
    }

    [[nodiscard]] LabeledDataset target_data(std::uint64_t data_seed) const {
        Rng rng(derive_seed(data_seed, "target-data"));
        return new_class_dataset(data.new_class_n, data.new_class_mean, data.std_dev, data.new_class, rng);
    }

    void validate() const {
        pretrain_config().validate();
        personalize_config().validate();
        if (data.new_class >= arch.num_classes) throw ConfigError("data.new_class must be < model.num_classes");
        if (arch.num_classes < kPentagonClasses) throw ConfigError("model.num_classes must be >= 5");
        if (data.prior_class >= kPentagonClasses) throw ConfigError("data.prior_class must be one of 0..4");
        if (eval.knn_k < 1 || eval.n_eval * kPentagonClasses <= eval.knn_k) {
            throw ConfigError("eval.k must be >= 1 and below the pooled sample count");
        }
        if (eval.n_eval * kPentagonClasses < 50) throw ConfigError("eval.n_eval too small for the KL estimator");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_double(v[i]);
    return out;
}

inline std::string join_u64(const std::vector<std::uint64_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

}  // namespace detail

/// Parses config text. `source` names the file in error messages
/// ("<source>:<line>: ...").
inline ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>") {
    ExperimentConfig cfg;
    using Setter = std::function<void(std::string_view)>;
    auto sz = [](std::size_t& dst) { return [&dst](std::string_view v) { dst = static_cast<std::size_t>(parse_u64(v)); }; };
    auto u64 = [](std::uint64_t& dst) { return [&dst](std::string_view v) { dst = parse_u64(v); }; };
    auto dbl = [](double& dst) { return [&dst](std::string_view v) { dst = parse_double(v); }; };
    auto point = [](Point2& dst) {
        return [&dst](std::string_view v) {
            const auto f = split(v, ',');
            if (f.size() != 2) throw InputError("expected 'x, y'");
            dst = {parse_double(detail::trim(f[0])), parse_double(detail::trim(f[1]))};
        };
    };

    const std::map<std::string, Setter, std::less<>> keys = {
        {"run.seed", u64(cfg.seed)},
        {"run.log_interval", sz(cfg.log_interval)},
        {"run.jobs", sz(cfg.jobs)},
        {"model.hidden", sz(cfg.arch.hidden)},
        {"model.class_emb_dim", sz(cfg.arch.class_emb_dim)},
        {"model.time_emb_dim", sz(cfg.arch.time_emb_dim)},
        {"model.num_classes", sz(cfg.arch.num_classes)},
        {"schedule.T",
         [&](std::string_view v) {
             cfg.schedule.T = static_cast<std::size_t>(parse_u64(v));
             cfg.arch.timesteps = cfg.schedule.T;
         }},
        {"schedule.s", dbl(cfg.schedule.offset)},
        {"data.n_per_class", sz(cfg.data.n_per_class)},
        {"data.radius", dbl(cfg.data.radius)},
        {"data.std", dbl(cfg.data.std_dev)},
        {"data.new_class_n", sz(cfg.data.new_class_n)},
        {"data.new_class_mean", point(cfg.data.new_class_mean)},
        {"data.new_class", sz(cfg.data.new_class)},
        {"data.prior_class", sz(cfg.data.prior_class)},
        {"pretrain.lr", dbl(cfg.pretrain.lr)},
        {"pretrain.iterations", sz(cfg.pretrain.iterations)},
        {"pretrain.batch_size", sz(cfg.pretrain.batch_size)},
        {"personalize.lr", dbl(cfg.personalize.lr)},
        {"personalize.iterations", sz(cfg.personalize.iterations)},
        {"personalize.batch_size", sz(cfg.personalize.batch_size)},
        {"personalize.method",
         [&](std::string_view v) {
             const auto m = parse_method(v);
             if (!m) throw InputError("method must be vanilla, prior or lipschitz");
             cfg.method = *m;
         }},
        {"personalize.lambda", dbl(cfg.lambda)},
        {"personalize.prior_weight", dbl(cfg.prior_weight)},
        {"personalize.norm",
         [&](std::string_view v) {
             const auto n = parse_norm(v);
             if (!n) throw InputError("norm must be l1, l2 or l2sq");
             cfg.norm = *n;
         }},
        {"eval.n_eval", sz(cfg.eval.n_eval)},
        {"eval.k", sz(cfg.eval.knn_k)},
        {"eval.radius_thresh", dbl(cfg.eval.radius_thresh)},
        {"eval.n_probes", sz(cfg.eval.n_probes)},
        {"eval.probe_seed", u64(cfg.eval.probe_seed)},
        {"sweep.lambdas",
         [&](std::string_view v) {
             cfg.sweep_lambdas.clear();
             if (detail::trim(v).empty()) return;
             for (auto f : split(v, ',')) cfg.sweep_lambdas.push_back(parse_double(detail::trim(f)));
         }},
        {"sweep.seeds",
         [&](std::string_view v) {
             cfg.sweep_seeds.clear();
             if (detail::trim(v).empty()) return;
             for (auto f : split(v, ',')) cfg.sweep_seeds.push_back(parse_u64(detail::trim(f)));
         }},
    };

    std::string section;
    std::size_t lineno = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    auto fail = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail("unterminated section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail("expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (section.empty()) fail("key '" + std::string(key) + "' outside of a [section]");
        const std::string full = section + "." + std::string(key);
        const auto it = keys.find(full);
        if (it == keys.end()) fail("unknown key '" + std::string(key) + "' in [" + section + "]");
        try {
            it->second(value);
        } catch (const InputError& e) {
            fail(std::string(key) + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

/// Canonical text form; parse_config(to_text(c)) reproduces c exactly.
inline std::string to_text(const ExperimentConfig& c) {
    std::ostringstream s;
    s << "[run]\nseed = " << c.seed << "\nlog_interval = " << c.log_interval << "\njobs = " << c.jobs << "\n\n";
    s << "[model]\nhidden = " << c.arch.hidden << "\nclass_emb_dim = " << c.arch.class_emb_dim
      << "\ntime_emb_dim = " << c.arch.time_emb_dim << "\nnum_classes = " << c.arch.num_classes << "\n\n";
    s << "[schedule]\nT = " << c.schedule.T << "\ns = " << format_double(c.schedule.offset) << "\n\n";
    s << "[data]\nn_per_class = " << c.data.n_per_class << "\nradius = " << format_double(c.data.radius)
      << "\nstd = " << format_double(c.data.std_dev) << "\nnew_class_n = " << c.data.new_class_n
      << "\nnew_class_mean = " << format_double(c.data.new_class_mean.x) << ", "
      << format_double(c.data.new_class_mean.y) << "\nnew_class = " << c.data.new_class
      << "\nprior_class = " << c.data.prior_class << "\n\n";
    s << "[pretrain]\nlr = " << format_double(c.pretrain.lr) << "\niterations = " << c.pretrain.iterations
      << "\nbatch_size = " << c.pretrain.batch_size << "\n\n";
    s << "[personalize]\nmethod = " << to_string(c.method) << "\nlr = " << format_double(c.personalize.lr)
      << "\niterations = " << c.personalize.iterations << "\nbatch_size = " << c.personalize.batch_size
      << "\nlambda = " << format_double(c.lambda) << "\nprior_weight = " << format_double(c.prior_weight)
      << "\nnorm = " << to_string(c.norm) << "\n\n";
    s << "[eval]\nn_eval = " << c.eval.n_eval << "\nk = " << c.eval.knn_k
      << "\nradius_thresh = " << format_double(c.eval.radius_thresh) << "\nn_probes = " << c.eval.n_probes
      << "\nprobe_seed = " << c.eval.probe_seed << "\n\n";
    s << "[sweep]\nlambdas = " << detail::join_doubles(c.sweep_lambdas)
      << "\nseeds = " << detail::join_u64(c.sweep_seeds) << "\n";
    return s.str();
}

}  // namespace driftguard
