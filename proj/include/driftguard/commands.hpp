// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface: pretrain, personalize, sample, eval, sweep, gradcheck
// and replay. run_cli() returns the process exit code and never throws.

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftguard/checkpoint.hpp"
#include "driftguard/config.hpp"
#include "driftguard/csv.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/gradcheck.hpp"
#include "driftguard/metrics.hpp"
#include "driftguard/sweep.hpp"
#include "driftguard/trainer.hpp"

namespace driftguard::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kCheckpointFile = "checkpoint.lrpd";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr double kGradCheckTolerance = 1e-4;

inline std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// --out wins; otherwise $DRIFTGUARD_OUT (or ./runs) joined with `name`.
inline fs::path resolve_run_dir(const std::string& out_flag, const std::string& name) {
    if (!out_flag.empty()) return out_flag;
    const char* env = std::getenv("DRIFTGUARD_OUT");
    const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
    return root / name;
}

inline void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
}

inline std::string lambda_tag(double lam) {
    std::string s = format_double(lam);
    for (char& ch : s) {
        if (ch == '.') ch = 'p';
        if (ch == '+') ch = 'p';
    }
    return s;
}

inline void write_text(const fs::path& path, const std::string& text) {
    auto out = open_for_write(path);
    out << text;
}

inline void write_manifest(const fs::path& dir, const json& manifest) { write_text(dir / kManifestFile, manifest.dump(2) + "\n"); }

inline json read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": malformed manifest: " + e.what());
    }
}

// --- individual commands ----------------------------------------------------

struct RunOutcome {
    fs::path dir;
    std::uint64_t checkpoint_hash = 0;
};

inline RunOutcome do_pretrain(const ExperimentConfig& cfg, const fs::path& dir) {
    const std::string started = utc_now();
    make_dirs(dir);
    const LabeledDataset data = cfg.pretrain_data(cfg.seed);
    const TrainResult result = pretrain(cfg.pretrain_config(), data);
    const std::uint64_t hash = save_checkpoint(dir / kCheckpointFile, {result.params, cfg.schedule, cfg.seed});
    write_train_log_csv(dir / "train_log.csv", result.log);
    write_dataset_csv(dir / "dataset.csv", data);
    write_text(dir / "config.ini", to_text(cfg));
    write_manifest(dir, {{"tool", "driftguard"},
                         {"command", "pretrain"},
                         {"config", to_text(cfg)},
                         {"seed", cfg.seed},
                         {"input_checkpoint", nullptr},
                         {"input_checkpoint_hash", nullptr},
                         {"output_checkpoint", kCheckpointFile},
                         {"output_checkpoint_hash", hex64(hash)},
                         {"params_checksum", hex64(result.log.final_checksum)},
                         {"wall_time_s", result.log.wall_time_s},
                         {"started_at", started},
                         {"finished_at", utc_now()},
                         {"artifacts", {kCheckpointFile, "train_log.csv", "dataset.csv", "config.ini"}}});
    return {dir, hash};
}

inline RunOutcome do_personalize(const ExperimentConfig& cfg, const fs::path& base_path, const fs::path& dir) {
    const std::string started = utc_now();
    const std::uint64_t base_hash = file_hash(base_path);
    const Checkpoint base = load_checkpoint(base_path);
    if (!(base.params.arch == cfg.arch) || !(base.schedule == cfg.schedule)) {
        throw ConfigError("base checkpoint architecture or schedule differs from the config");
    }
    make_dirs(dir);
    const LabeledDataset target = cfg.target_data(cfg.seed);
    std::optional<LabeledDataset> prior;
    if (cfg.method == Method::prior) prior = cfg.pretrain_data(base.seed).filter(cfg.data.prior_class);
    const TrainResult result = personalize(cfg.personalize_config(), base.params, target, prior ? &*prior : nullptr);
    const std::uint64_t hash = save_checkpoint(dir / kCheckpointFile, {result.params, cfg.schedule, cfg.seed});
    write_train_log_csv(dir / "train_log.csv", result.log);
    write_dataset_csv(dir / "target.csv", target);
    write_text(dir / "config.ini", to_text(cfg));
    write_manifest(dir, {{"tool", "driftguard"},
                         {"command", "personalize"},
                         {"config", to_text(cfg)},
                         {"seed", cfg.seed},
                         {"method", to_string(cfg.method)},
                         {"lambda", cfg.method == Method::lipschitz ? cfg.lambda : 0.0},
                         {"prior_weight", cfg.method == Method::prior ? cfg.prior_weight : 0.0},
                         {"norm", to_string(cfg.norm)},
                         {"input_checkpoint", fs::absolute(base_path).string()},
                         {"input_checkpoint_hash", hex64(base_hash)},
                         {"output_checkpoint", kCheckpointFile},
                         {"output_checkpoint_hash", hex64(hash)},
                         {"params_checksum", hex64(result.log.final_checksum)},
                         {"wall_time_s", result.log.wall_time_s},
                         {"started_at", started},
                         {"finished_at", utc_now()},
                         {"artifacts", {kCheckpointFile, "train_log.csv", "target.csv", "config.ini"}}});
    return {dir, hash};
}

inline void do_sample(const fs::path& ckpt_path, std::size_t cls, std::size_t n, std::uint64_t seed,
                      const fs::path& out_csv) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    if (cls >= ck.params.arch.num_classes) {
        throw InputError("class " + std::to_string(cls) + " out of range [0, " + std::to_string(ck.params.arch.num_classes) +
                         ")");
    }
    const NoiseSchedule sched = cosine_schedule(ck.schedule.T, ck.schedule.offset);
    Rng rng(derive_seed(seed, "sample"));
    const auto pts = ancestral_sample(ck.params, cls, n, sched, rng);
    const std::vector<std::size_t> labels(pts.size(), cls);
    if (out_csv.has_parent_path()) make_dirs(out_csv.parent_path());
    auto out = open_for_write(out_csv);
    write_points_csv(out, pts, labels);
}

inline DriftReport do_eval(const ExperimentConfig& cfg, const fs::path& base_path, const fs::path& per_path,
                           std::uint64_t seed, const std::string& method, double lambda) {
    const Checkpoint base = load_checkpoint(base_path);
    const Checkpoint per = load_checkpoint(per_path);
    if (!base.params.congruent(per.params) || !(base.schedule == per.schedule)) {
        throw InputError("base and personalized checkpoints have different architectures");
    }
    const NoiseSchedule sched = cosine_schedule(base.schedule.T, base.schedule.offset);
    EvalConfig ec = cfg.eval_config();
    ec.seed = seed;
    ec.method = method;
    ec.lambda = lambda;
    Rng base_rng(derive_seed(seed, "eval-base"));
    const auto base_samples = sample_classes(base.params, kPentagonClasses, ec.n_eval, sched, base_rng);
    Rng rng(derive_seed(seed, "eval"));
    return make_drift_report(base.params, per.params, base_samples, sched, ec, rng);
}

inline void write_sweep_csv(const fs::path& path, const std::vector<LambdaSummary>& rows) {
    auto out = open_for_write(path);
    out << "lambda,n_ok,n_failed,delta_theta_l2_mean,delta_theta_l2_std,delta_theta_l1_mean,delta_theta_l1_std,"
           "delta_eps_mean,delta_eps_std,kl_mean,kl_std,coverage_mean,coverage_std,new_class_fit_mean,"
           "new_class_fit_std\n";
    for (const LambdaSummary& s : rows) {
        out << format_double(s.lambda) << ',' << s.n_ok << ',' << s.n_failed;
        for (const MeanStd& m : {s.delta_theta_l2, s.delta_theta_l1, s.delta_eps, s.kl, s.mean_coverage, s.new_class_fit}) {
            out << ',' << format_double(m.mean) << ',' << format_double(m.std);
        }
        out << '\n';
    }
}

/// Pretrains one base per seed (or loads `base_path` for all seeds), runs
/// the lambda x seed grid, and writes cell directories plus aggregates.
/// Returns the number of successful cells.
inline std::size_t do_sweep(const ExperimentConfig& cfg, const fs::path& dir, const std::string& base_path,
                            std::ostream& log) {
    if (cfg.sweep_lambdas.size() < 2) throw ConfigError("sweep: [sweep] lambdas must list at least 2 values");
    if (cfg.sweep_seeds.empty()) throw ConfigError("sweep: [sweep] seeds must list at least 1 value");
    const std::string started = utc_now();
    make_dirs(dir / "cells");
    write_text(dir / "config.ini", to_text(cfg));

    std::map<std::uint64_t, ModelParams> bases;
    std::map<std::uint64_t, LabeledDataset> targets;
    std::map<std::uint64_t, std::string> base_hashes;
    std::optional<Checkpoint> shared;
    if (!base_path.empty()) shared = load_checkpoint(base_path);
    for (std::uint64_t seed : cfg.sweep_seeds) {
        ExperimentConfig c = cfg;
        c.seed = seed;
        if (shared) {
            bases[seed] = shared->params;
            base_hashes[seed] = hex64(file_hash(base_path));
        } else {
            const RunOutcome o = do_pretrain(c, dir / ("base-seed" + std::to_string(seed)));
            bases[seed] = load_checkpoint(o.dir / kCheckpointFile).params;
            base_hashes[seed] = hex64(o.checkpoint_hash);
            log << "pretrained base for seed " << seed << " -> " << o.dir.string() << '\n';
        }
        targets[seed] = c.target_data(seed);
    }

    SweepPlan plan;
    plan.personalize = cfg.personalize_config();
    plan.eval = cfg.eval_config();
    plan.lambdas = cfg.sweep_lambdas;
    plan.seeds = cfg.sweep_seeds;
    plan.jobs = cfg.jobs;
    SweepInputs inputs{[&](std::uint64_t s) -> const ModelParams& { return bases.at(s); },
                       [&](std::uint64_t s) -> const LabeledDataset& { return targets.at(s); }};

    const fs::path cells_csv = dir / "cells.csv";
    fs::remove(cells_csv);
    json cell_status = json::array();
    auto on_cell = [&](const SweepCell& cell) {
        const fs::path cdir = dir / "cells" / ("lam" + lambda_tag(cell.lambda) + "-seed" + std::to_string(cell.seed));
        json entry = {{"lambda", cell.lambda}, {"seed", cell.seed}, {"ok", cell.ok}, {"dir", cdir.lexically_relative(dir).string()}};
        if (cell.ok) {
            make_dirs(cdir);
            ExperimentConfig c = cfg;
            c.seed = cell.seed;
            c.method = Method::lipschitz;
            c.lambda = cell.lambda;
            const std::uint64_t hash = save_checkpoint(cdir / kCheckpointFile, {cell.params, cfg.schedule, cell.seed});
            write_train_log_csv(cdir / "train_log.csv", cell.log);
            fs::remove(cdir / "report.csv");
            append_drift_row(cdir / "report.csv", cell.report);
            write_manifest(cdir, {{"tool", "driftguard"},
                                  {"command", "personalize"},
                                  {"config", to_text(c)},
                                  {"seed", cell.seed},
                                  {"method", "lipschitz"},
                                  {"lambda", cell.lambda},
                                  {"norm", to_string(c.norm)},
                                  {"input_checkpoint",
                                   shared ? fs::absolute(base_path).string()
                                          : fs::absolute(dir / ("base-seed" + std::to_string(cell.seed)) / kCheckpointFile).string()},
                                  {"input_checkpoint_hash", base_hashes.at(cell.seed)},
                                  {"output_checkpoint", kCheckpointFile},
                                  {"output_checkpoint_hash", hex64(hash)},
                                  {"params_checksum", hex64(cell.log.final_checksum)},
                                  {"finished_at", utc_now()},
                                  {"artifacts", {kCheckpointFile, "train_log.csv", "report.csv"}}});
            entry["output_checkpoint_hash"] = hex64(hash);
            log << "cell lambda=" << format_double(cell.lambda) << " seed=" << cell.seed
                << " dtheta=" << format_double(cell.report.delta_theta_l2) << " kl=" << format_double(cell.report.kl)
                << '\n';
        } else {
            entry["error"] = cell.error;
            log << "cell lambda=" << format_double(cell.lambda) << " seed=" << cell.seed << " FAILED: " << cell.error
                << '\n';
        }
        cell_status.push_back(entry);
    };
    const SweepReport report = sweep(plan, inputs, on_cell);

    for (const SweepCell& cell : report.cells) {
        if (cell.ok) append_drift_row(cells_csv, cell.report);
    }
    write_sweep_csv(dir / "sweep.csv", report.per_lambda);
    json manifest = {{"tool", "driftguard"},
                     {"command", "sweep"},
                     {"config", to_text(cfg)},
                     {"base_checkpoint", base_path.empty() ? json(nullptr) : json(fs::absolute(base_path).string())},
                     {"cells", cell_status},
                     {"n_ok", report.n_ok()},
                     {"n_failed", report.cells.size() - report.n_ok()},
                     {"started_at", started},
                     {"finished_at", utc_now()},
                     {"artifacts", {"sweep.csv", "cells.csv", "config.ini"}}};
    if (report.bound) {
        manifest["bound"] = {{"max_ratio", report.bound->max_ratio}, {"rank_correlation", report.bound->rank_correlation}};
    }
    write_manifest(dir, manifest);
    return report.n_ok();
}

struct GradCheckSummary {
    double worst = 0.0;
    std::vector<double> per_draw;
};

/// `draws` independent parameter initializations with random probe batches.
inline GradCheckSummary do_gradcheck(const Arch& arch, std::uint64_t seed, std::size_t draws, std::size_t probes) {
    if (probes < 1 || probes > 8) throw ConfigError("gradcheck: probe batch must hold 1..8 points");
    GradCheckSummary s;
    for (std::size_t d = 0; d < draws; ++d) {
        Rng rng(derive_seed(seed + d, "gradcheck"));
        ModelParams p = init_params(arch, rng);
        // Move biases and embeddings off their init values so every path is exercised.
        for (double& v : p.b1.values) v = rng.normal(0.0, 0.1);
        for (double& v : p.b2.values) v = rng.normal(0.0, 0.1);
        for (double& v : p.class_emb.values) v = rng.normal(0.0, 0.5);
        for (double& v : p.time_emb.values) v = rng.normal(0.0, 0.5);
        const auto batch = random_probes(arch, probes, rng);
        const double err = grad_check(p, batch).max_rel_error;
        s.per_draw.push_back(err);
        s.worst = std::max(s.worst, err);
    }
    return s;
}

/// Re-executes the run a manifest describes into `out_dir` and compares the
/// new checkpoint hash with the recorded one.
inline bool do_replay(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& log) {
    const json m = read_manifest(manifest_path);
    const std::string command = m.value("command", "");
    const ExperimentConfig cfg = parse_config(m.at("config").get<std::string>(), manifest_path.string() + "#config");
    const std::string expected = m.value("output_checkpoint_hash", "");
    RunOutcome o;
    if (command == "pretrain") {
        o = do_pretrain(cfg, out_dir);
    } else if (command == "personalize") {
        const fs::path base = m.at("input_checkpoint").get<std::string>();
        const std::string base_hash = hex64(file_hash(base));
        if (base_hash != m.value("input_checkpoint_hash", "")) {
            throw IntegrityError("replay: base checkpoint " + base.string() + " hash " + base_hash +
                                 " differs from the manifest");
        }
        o = do_personalize(cfg, base, out_dir);
    } else {
        throw ConfigError("replay: command '" + command + "' cannot be replayed");
    }
    const std::string got = hex64(o.checkpoint_hash);
    log << "expected " << expected << "\nreplayed " << got << '\n';
    return got == expected;
}

// --- entry point ------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"driftguard: diffusion personalization drift testbed"};
    app.require_subcommand(1);

    std::string config_path, base_path, per_path, out_path, norm_flag, manifest_path, method_label = "unknown";
    std::optional<std::uint64_t> seed_flag;
    std::size_t jobs = 0, cls = 0, n = 2000, draws = 20, probes = 8;
    double lambda_label = 0.0;

    auto* pre = app.add_subcommand("pretrain", "train the base model on the pentagon classes");
    pre->add_option("--config", config_path, "config file")->required();
    pre->add_option("--out", out_path, "run directory");
    pre->add_option("--seed", seed_flag, "override [run] seed");

    auto* per = app.add_subcommand("personalize", "finetune a base checkpoint on the new class");
    per->add_option("--config", config_path, "config file")->required();
    per->add_option("--base", base_path, "base checkpoint")->required();
    per->add_option("--out", out_path, "run directory");
    per->add_option("--seed", seed_flag, "override [run] seed");
    per->add_option("--norm", norm_flag, "regularizer norm: l1, l2 or l2sq");

    auto* smp = app.add_subcommand("sample", "ancestral samples for one class as x,y,label CSV");
    smp->add_option("--ckpt,--base", base_path, "checkpoint")->required();
    smp->add_option("--class", cls, "class id")->required();
    smp->add_option("--n", n, "number of samples");
    smp->add_option("--seed", seed_flag, "sampling seed");
    smp->add_option("--out", out_path, "output CSV")->required();

    auto* ev = app.add_subcommand("eval", "append a drift report row for base vs personalized");
    ev->add_option("--base", base_path, "base checkpoint")->required();
    ev->add_option("--per", per_path, "personalized checkpoint")->required();
    ev->add_option("--seed", seed_flag, "evaluation seed");
    ev->add_option("--out", out_path, "CSV to append to")->required();
    ev->add_option("--config", config_path, "config file (eval and data sections)");
    ev->add_option("--method", method_label, "method label for the row");
    ev->add_option("--lambda", lambda_label, "lambda label for the row");

    auto* sw = app.add_subcommand("sweep", "lambda x seed grid with aggregated drift");
    sw->add_option("--config", config_path, "config file")->required();
    sw->add_option("--out", out_path, "sweep directory");
    sw->add_option("--jobs", jobs, "parallel cells");
    sw->add_option("--base", base_path, "shared base checkpoint (default: pretrain one per seed)");
    sw->add_option("--norm", norm_flag, "regularizer norm: l1, l2 or l2sq");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    gc->add_option("--seed", seed_flag, "first draw seed");
    gc->add_option("--draws", draws, "number of parameter draws");
    gc->add_option("--probes", probes, "probe batch size (1..8)");
    gc->add_option("--config", config_path, "config file (model section)");

    auto* rp = app.add_subcommand("replay", "re-run a pretrain/personalize manifest and compare hashes");
    rp->add_option("--manifest", manifest_path, "manifest.json of the run")->required();
    rp->add_option("--out", out_path, "replay directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(ExitCode::UserError);
    }

    try {
        auto load_cfg = [&]() {
            ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
            if (seed_flag) cfg.seed = *seed_flag;
            if (!norm_flag.empty()) {
                const auto nk = parse_norm(norm_flag);
                if (!nk) throw ConfigError("--norm must be l1, l2 or l2sq");
                cfg.norm = *nk;
            }
            if (jobs > 0) cfg.jobs = jobs;
            cfg.validate();
            return cfg;
        };

        if (*pre) {
            const ExperimentConfig cfg = load_cfg();
            const RunOutcome o = do_pretrain(cfg, resolve_run_dir(out_path, "pretrain-seed" + std::to_string(cfg.seed)));
            out << o.dir.string() << '\n';
        } else if (*per) {
            const ExperimentConfig cfg = load_cfg();
            std::string name = "personalize-" + std::string(to_string(cfg.method));
            if (cfg.method == Method::lipschitz) name += "-lam" + lambda_tag(cfg.lambda);
            name += "-seed" + std::to_string(cfg.seed);
            const RunOutcome o = do_personalize(cfg, base_path, resolve_run_dir(out_path, name));
            out << o.dir.string() << '\n';
        } else if (*smp) {
            do_sample(base_path, cls, n, seed_flag.value_or(0), out_path);
            out << out_path << '\n';
        } else if (*ev) {
            const ExperimentConfig cfg = load_cfg();
            const DriftReport r = do_eval(cfg, base_path, per_path, seed_flag.value_or(cfg.seed), method_label, lambda_label);
            if (fs::path(out_path).has_parent_path()) make_dirs(fs::path(out_path).parent_path());
            append_drift_row(out_path, r);
            out << drift_row(r) << '\n';
        } else if (*sw) {
            const ExperimentConfig cfg = load_cfg();
            const std::size_t ok = do_sweep(cfg, resolve_run_dir(out_path, "sweep"), base_path, out);
            if (ok == 0) {
                err << "sweep: every cell failed\n";
                return static_cast<int>(ExitCode::RuntimeFailure);
            }
        } else if (*gc) {
            const ExperimentConfig cfg = load_cfg();
            const GradCheckSummary s = do_gradcheck(cfg.arch, seed_flag.value_or(1), draws, probes);
            for (std::size_t i = 0; i < s.per_draw.size(); ++i) {
                out << "draw " << i << " max_rel_error " << format_double(s.per_draw[i]) << '\n';
            }
            out << "worst " << format_double(s.worst) << '\n';
            if (!(s.worst < kGradCheckTolerance)) return static_cast<int>(ExitCode::RuntimeFailure);
        } else if (*rp) {
            const fs::path mpath = manifest_path;
            const fs::path dir = out_path.empty() ? mpath.parent_path() / "replay" : fs::path(out_path);
            if (!do_replay(mpath, dir, out)) {
                err << "replay: checkpoint hash differs from the manifest\n";
                return static_cast<int>(ExitCode::IntegrityFailure);
            }
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::RuntimeFailure);
    }
    return 0;
}

}  // namespace driftguard::cli
