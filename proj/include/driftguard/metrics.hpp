// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Drift metrics between a base checkpoint and a personalized one.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "driftguard/datagen.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/objectives.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/sampler.hpp"
#include "driftguard/schedule.hpp"

namespace driftguard {

struct EpsProbe {
    Point2 x;
    std::size_t t = 0;
    std::size_t c = 0;
};

/// Fixed probe set for delta_eps: x ~ N(0, 9I), t uniform over the
/// schedule, c uniform over [0, num_classes).
inline std::vector<EpsProbe> make_eps_probes(std::size_t n, std::size_t timesteps, std::size_t num_classes,
                                             std::uint64_t seed) {
    Rng rng(derive_seed(seed, "eps-probes"));
    std::vector<EpsProbe> probes(n);
    for (EpsProbe& p : probes) {
        p.x = {rng.normal(0.0, 3.0), rng.normal(0.0, 3.0)};
        p.t = rng.uniform_index(timesteps);
        p.c = rng.uniform_index(num_classes);
    }
    return probes;
}

/// Sum over probes of ||eps_base - eps_per||.
inline double delta_eps(const ModelParams& base, const ModelParams& per, std::span<const EpsProbe> probes) {
    if (!base.congruent(per)) throw InputError("delta_eps: architectures differ");
    double total = 0.0;
    Cache cache;
    for (const EpsProbe& p : probes) {
        const Point2 a = forward(base, p.x, p.t, p.c, cache);
        const Point2 b = forward(per, p.x, p.t, p.c, cache);
        total += norm(a - b);
    }
    return total;
}

namespace detail {

/// Exact k-nearest-neighbour squared distances in 2D. Points are sorted by x
/// once; each query scans outward from its x position and stops once the
/// horizontal gap alone exceeds the current k-th best.
class KnnIndex {
public:
    explicit KnnIndex(std::span<const Point2> pts) : pts_(pts.begin(), pts.end()) {
        std::sort(pts_.begin(), pts_.end(), [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
        xs_.resize(pts_.size());
        for (std::size_t i = 0; i < pts_.size(); ++i) xs_[i] = pts_[i].x;
    }

    /// Squared distance to the k-th nearest point. With skip_self, one point
    /// at distance exactly zero (the query itself) is ignored.
    [[nodiscard]] double kth_sq(Point2 q, std::size_t k, bool skip_self) const {
        best_.assign(k, std::numeric_limits<double>::infinity());
        bool self_skipped = !skip_self;
        const std::size_t n = xs_.size();
        const std::size_t mid = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), q.x) - xs_.begin());
        auto offer = [&](std::size_t i) {
            const double dx = pts_[i].x - q.x;
            const double dy = pts_[i].y - q.y;
            const double d = dx * dx + dy * dy;
            if (!self_skipped && d == 0.0 && pts_[i] == q) {
                self_skipped = true;
                return;
            }
            if (d < best_.back()) {
                auto pos = std::upper_bound(best_.begin(), best_.end(), d);
                best_.insert(pos, d);
                best_.pop_back();
            }
        };
        std::size_t lo = mid;
        std::size_t hi = mid;
        bool lo_open = lo > 0;
        bool hi_open = hi < n;
        while (lo_open || hi_open) {
            if (hi_open) {
                const double dx = xs_[hi] - q.x;
                if (dx * dx > best_.back()) {
                    hi_open = false;
                } else {
                    offer(hi);
                    hi_open = ++hi < n;
                }
            }
            if (lo_open) {
                const double dx = q.x - xs_[lo - 1];
                if (dx * dx > best_.back()) {
                    lo_open = false;
                } else {
                    offer(lo - 1);
                    lo_open = --lo > 0;
                }
            }
        }
        return best_.back();
    }

private:
    std::vector<Point2> pts_;
    std::vector<double> xs_;
    mutable std::vector<double> best_;
};

inline double knn_kl_once(std::span<const Point2> p, std::span<const Point2> q, std::size_t k, bool& saw_zero) {
    const KnnIndex within(p);
    const KnnIndex across(q);
    const double n = static_cast<double>(p.size());
    const double m = static_cast<double>(q.size());
    double sum = 0.0;
    saw_zero = false;
    for (Point2 x : p) {
        const double rho = within.kth_sq(x, k, true);
        const double nu = across.kth_sq(x, k, false);
        if (rho == 0.0 || nu == 0.0) {
            saw_zero = true;
            return 0.0;
        }
        sum += 0.5 * std::log(nu / rho);  // log of the ratio of distances
    }
    constexpr double d = 2.0;
    return d / n * sum + std::log(m / (n - 1.0));
}

}  // namespace detail

/// k-NN estimate of KL(P || Q) in nats for 2D samples. If any neighbour
/// distance is zero (duplicated points) both sets get uniform jitter of
/// magnitude 1e-9 from a fixed stream and the estimate is recomputed.
inline double knn_kl(std::span<const Point2> samples_p, std::span<const Point2> samples_q, std::size_t k = 5) {
    if (samples_p.size() < 50 || samples_q.size() < 50) throw InputError("knn_kl: need at least 50 points per set");
    if (k < 1 || k >= std::min(samples_p.size(), samples_q.size())) {
        throw InputError("knn_kl: k must satisfy 1 <= k < min set size");
    }
    bool saw_zero = false;
    const double est = detail::knn_kl_once(samples_p, samples_q, k, saw_zero);
    if (!saw_zero) return est;

    Rng jitter(derive_seed(0, "knn-jitter"));
    auto jittered = [&](std::span<const Point2> s) {
        std::vector<Point2> out(s.begin(), s.end());
        for (Point2& pt : out) {
            pt.x += jitter.uniform(-1e-9, 1e-9);
            pt.y += jitter.uniform(-1e-9, 1e-9);
        }
        return out;
    };
    const auto jp = jittered(samples_p);
    const auto jq = jittered(samples_q);
    const double retry = detail::knn_kl_once(jp, jq, k, saw_zero);
    if (saw_zero) throw InputError("knn_kl: zero neighbour distance persists after jitter");
    return retry;
}

/// For each class k in class_means, the fraction of its samples within
/// radius_thresh of class_means[k].
inline std::vector<double> class_coverage(const std::map<std::size_t, std::vector<Point2>>& samples_per_class,
                                          std::span<const Point2> class_means, double radius_thresh) {
    std::vector<double> out(class_means.size(), 0.0);
    for (std::size_t k = 0; k < class_means.size(); ++k) {
        const auto it = samples_per_class.find(k);
        if (it == samples_per_class.end() || it->second.empty()) {
            throw InputError("class_coverage: no samples for class " + std::to_string(k));
        }
        std::size_t inside = 0;
        for (Point2 p : it->second) {
            if (norm(p - class_means[k]) <= radius_thresh) ++inside;
        }
        out[k] = static_cast<double>(inside) / static_cast<double>(it->second.size());
    }
    return out;
}

struct DriftReport {
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string method;
    double delta_theta_l2 = 0.0;
    double delta_theta_l1 = 0.0;
    double delta_eps = 0.0;
    double kl = 0.0;
    std::array<double, kPentagonClasses> coverage{};
    double new_class_fit = 0.0;
    double bound_ratio = 0.0;

    [[nodiscard]] double mean_coverage() const {
        return std::accumulate(coverage.begin(), coverage.end(), 0.0) / static_cast<double>(coverage.size());
    }
    friend bool operator==(const DriftReport&, const DriftReport&) = default;
};

struct BoundSummary {
    double max_ratio = 0.0;         // max kl / delta_theta_l2 over reports with delta_theta_l2 > 0
    double rank_correlation = 0.0;  // Spearman, ties averaged
};

/// Average ranks (1-based), ties share the mean rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t m = i; m <= j; ++m) ranks[idx[m]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    return pearson(ra, rb);
}

/// Empirical Lipschitz constant max(kl / delta_theta) and the rank
/// correlation between kl and delta_theta.
inline BoundSummary bound_check(std::span<const DriftReport> reports) {
    if (reports.size() < 3) throw InputError("bound_check: need at least 3 reports");
    BoundSummary s;
    bool any = false;
    std::vector<double> kls, thetas;
    for (const DriftReport& r : reports) {
        kls.push_back(r.kl);
        thetas.push_back(r.delta_theta_l2);
        if (r.delta_theta_l2 > 0.0) {
            const double ratio = r.kl / r.delta_theta_l2;
            s.max_ratio = any ? std::max(s.max_ratio, ratio) : ratio;
            any = true;
        }
    }
    s.rank_correlation = spearman(kls, thetas);
    return s;
}

struct EvalConfig {
    std::size_t n_eval = 2000;  // samples per class
    std::size_t knn_k = 5;
    double radius_thresh = 1.5;
    std::vector<Point2> class_means;  // the original (pentagon) classes
    Point2 new_class_mean{0.0, 0.0};
    std::size_t new_class = 5;
    std::size_t n_probes = 512;
    std::uint64_t probe_seed = 20240917;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string method;
};

/// Class-conditional samples for classes [0, n_classes) from one model.
inline std::map<std::size_t, std::vector<Point2>> sample_classes(const ModelParams& params, std::size_t n_classes,
                                                                 std::size_t n, const NoiseSchedule& sched, Rng& rng) {
    std::map<std::size_t, std::vector<Point2>> out;
    for (std::size_t c = 0; c < n_classes; ++c) out[c] = ancestral_sample(params, c, n, sched, rng);
    return out;
}

inline std::vector<Point2> pooled(const std::map<std::size_t, std::vector<Point2>>& by_class) {
    std::vector<Point2> out;
    for (const auto& [c, pts] : by_class) out.insert(out.end(), pts.begin(), pts.end());
    return out;
}

/// Builds the report from base samples drawn by the caller (so a sweep can
/// reuse them across cells).
inline DriftReport make_drift_report(const ModelParams& base, const ModelParams& per,
                                     const std::map<std::size_t, std::vector<Point2>>& base_samples,
                                     const NoiseSchedule& sched, const EvalConfig& cfg, Rng& rng) {
    if (!base.congruent(per)) throw InputError("make_drift_report: architectures differ");
    if (cfg.class_means.size() != kPentagonClasses) {
        throw InputError("make_drift_report: expected " + std::to_string(kPentagonClasses) + " class means");
    }
    DriftReport r;
    r.lambda = cfg.lambda;
    r.seed = cfg.seed;
    r.method = cfg.method;
    r.delta_theta_l2 = flat_l2_distance(per, base);
    r.delta_theta_l1 = param_distance(per, base, NormKind::l1);
    const auto probes = make_eps_probes(cfg.n_probes, base.arch.timesteps, kPentagonClasses, cfg.probe_seed);
    r.delta_eps = delta_eps(base, per, probes);

    const auto per_samples = sample_classes(per, kPentagonClasses, cfg.n_eval, sched, rng);
    r.kl = knn_kl(pooled(base_samples), pooled(per_samples), cfg.knn_k);
    const auto cov = class_coverage(per_samples, cfg.class_means, cfg.radius_thresh);
    std::copy(cov.begin(), cov.end(), r.coverage.begin());

    if (cfg.new_class < per.arch.num_classes) {
        const auto fresh = ancestral_sample(per, cfg.new_class, cfg.n_eval, sched, rng);
        std::size_t inside = 0;
        for (Point2 p : fresh) {
            if (norm(p - cfg.new_class_mean) <= cfg.radius_thresh) ++inside;
        }
        r.new_class_fit = static_cast<double>(inside) / static_cast<double>(fresh.size());
    }
    r.bound_ratio = r.delta_theta_l2 > 0.0 ? r.kl / r.delta_theta_l2 : 0.0;
    return r;
}

/// Draws base samples from a dedicated stream, then the personalized ones.
inline DriftReport make_drift_report(const ModelParams& base, const ModelParams& per, const NoiseSchedule& sched,
                                     const EvalConfig& cfg, Rng& rng) {
    Rng base_rng(derive_seed(rng.next_u64(), "eval-base"));
    const auto base_samples = sample_classes(base, kPentagonClasses, cfg.n_eval, sched, base_rng);
    return make_drift_report(base, per, base_samples, sched, cfg, rng);
}

}  // namespace driftguard
