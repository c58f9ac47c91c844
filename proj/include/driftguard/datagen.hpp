// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

struct LabeledDataset {
    std::vector<Point2> points;
    std::vector<std::size_t> labels;
    std::vector<Point2> class_means;  // indexed by label
    double class_std = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }

    /// Points carrying `label`, in dataset order.
    [[nodiscard]] std::vector<Point2> points_of(std::size_t label) const {
        std::vector<Point2> out;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (labels[i] == label) out.push_back(points[i]);
        }
        return out;
    }

    /// Sub-dataset restricted to one label (means table kept intact).
    [[nodiscard]] LabeledDataset filter(std::size_t label) const {
        LabeledDataset out;
        out.class_means = class_means;
        out.class_std = class_std;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (labels[i] == label) {
                out.points.push_back(points[i]);
                out.labels.push_back(label);
            }
        }
        return out;
    }
};

inline constexpr std::size_t kPentagonClasses = 5;

/// Vertex k of the regular pentagon: radius (cos(2 pi k / 5 + pi/2), sin(...)).
inline Point2 pentagon_vertex(std::size_t k, double radius) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / 5.0 + std::numbers::pi / 2.0;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Five isotropic Gaussian classes at the pentagon vertices, generated class
/// by class (labels 0..4 in blocks of n_per_class).
inline LabeledDataset pentagon_dataset(std::size_t n_per_class, double radius, double std_dev, Rng& rng) {
    if (n_per_class < 1) throw ConfigError("pentagon_dataset: n_per_class must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("pentagon_dataset: radius must be > 0");
    if (!(std_dev > 0.0)) throw ConfigError("pentagon_dataset: std must be > 0");
    LabeledDataset ds;
    ds.class_std = std_dev;
    for (std::size_t k = 0; k < kPentagonClasses; ++k) ds.class_means.push_back(pentagon_vertex(k, radius));
    ds.points.reserve(n_per_class * kPentagonClasses);
    for (std::size_t k = 0; k < kPentagonClasses; ++k) {
        const Point2 mu = ds.class_means[k];
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const double dx = rng.normal();
            const double dy = rng.normal();
            ds.points.push_back({mu.x + std_dev * dx, mu.y + std_dev * dy});
            ds.labels.push_back(k);
        }
    }
    return ds;
}

/// n samples of N(mean, std^2 I) labeled `label`. class_means is sized so
/// that the label indexes it; unused slots stay at the origin.
inline LabeledDataset new_class_dataset(std::size_t n, Point2 mean, double std_dev, std::size_t label,
                                        Rng& rng) {
    if (!(std_dev > 0.0)) throw ConfigError("new_class_dataset: std must be > 0");
    LabeledDataset ds;
    ds.class_std = std_dev;
    ds.class_means.assign(label + 1, Point2{});
    ds.class_means[label] = mean;
    ds.points.reserve(n);
    ds.labels.assign(n, label);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rng.normal();
        const double dy = rng.normal();
        ds.points.push_back({mean.x + std_dev * dx, mean.y + std_dev * dy});
    }
    return ds;
}

}  // namespace driftguard
