// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Plot-ready CSV emission. Floats are written with 17 significant digits so
// every double survives a text round trip.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "driftguard/datagen.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/metrics.hpp"
#include "driftguard/trainer.hpp"

namespace driftguard {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InputError("not an unsigned integer: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::ofstream open_for_write(const std::filesystem::path& path, bool append = false) {
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

// --- datasets ---------------------------------------------------------------

inline constexpr std::string_view kDatasetHeader = "x,y,label";

inline void write_points_csv(std::ostream& out, std::span<const Point2> pts, std::span<const std::size_t> labels) {
    out << kDatasetHeader << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
        out << format_double(pts[i].x) << ',' << format_double(pts[i].y) << ',' << labels[i] << '\n';
    }
}

inline void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& ds) {
    auto out = open_for_write(path);
    write_points_csv(out, ds.points, ds.labels);
}

/// Reads `x,y,label` rows. class_means/class_std are not stored in the file
/// and are left empty.
inline LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    LabeledDataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line != kDatasetHeader) throw InputError(path.string() + ":1: expected header x,y,label");
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 3) throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        try {
            ds.points.push_back({parse_double(f[0]), parse_double(f[1])});
            ds.labels.push_back(parse_u64(f[2]));
        } catch (const InputError& e) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return ds;
}

// --- drift reports ----------------------------------------------------------

inline constexpr std::string_view kDriftHeader =
    "lambda,seed,method,delta_theta_l2,delta_theta_l1,delta_eps,kl,coverage_0,coverage_1,coverage_2,"
    "coverage_3,coverage_4,new_class_fit,bound_ratio";

inline std::string drift_row(const DriftReport& r) {
    std::ostringstream s;
    s << format_double(r.lambda) << ',' << r.seed << ',' << r.method << ',' << format_double(r.delta_theta_l2) << ','
      << format_double(r.delta_theta_l1) << ',' << format_double(r.delta_eps) << ',' << format_double(r.kl);
    for (double c : r.coverage) s << ',' << format_double(c);
    s << ',' << format_double(r.new_class_fit) << ',' << format_double(r.bound_ratio);
    return s.str();
}

inline DriftReport parse_drift_row(std::string_view line) {
    const auto f = split(line, ',');
    if (f.size() != 14) throw InputError("drift row: expected 14 fields, got " + std::to_string(f.size()));
    DriftReport r;
    r.lambda = parse_double(f[0]);
    r.seed = parse_u64(f[1]);
    r.method = std::string(f[2]);
    r.delta_theta_l2 = parse_double(f[3]);
    r.delta_theta_l1 = parse_double(f[4]);
    r.delta_eps = parse_double(f[5]);
    r.kl = parse_double(f[6]);
    for (std::size_t k = 0; k < r.coverage.size(); ++k) r.coverage[k] = parse_double(f[7 + k]);
    r.new_class_fit = parse_double(f[12]);
    r.bound_ratio = parse_double(f[13]);
    return r;
}

/// Appends one row, writing the header first if the file is new or empty.
inline void append_drift_row(const std::filesystem::path& path, const DriftReport& r) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    auto out = open_for_write(path, true);
    if (fresh) out << kDriftHeader << '\n';
    out << drift_row(r) << '\n';
}

inline std::vector<DriftReport> read_drift_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::vector<DriftReport> out;
    std::string line;
    std::getline(in, line);
    if (line != kDriftHeader) throw InputError(path.string() + ":1: unexpected drift report header");
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse_drift_row(line));
    }
    return out;
}

// --- training logs ----------------------------------------------------------

inline void write_train_log_csv(const std::filesystem::path& path, const TrainLog& log) {
    auto out = open_for_write(path);
    out << "step,denoise,prior,lipschitz,total,lambda,prior_weight,drift_l2\n";
    for (const TrainRecord& r : log.records) {
        out << r.step << ',' << format_double(r.loss.denoise) << ',' << format_double(r.loss.prior) << ','
            << format_double(r.loss.lipschitz) << ',' << format_double(r.loss.total) << ','
            << format_double(r.loss.lambda) << ',' << format_double(r.loss.prior_weight) << ','
            << format_double(r.drift_l2) << '\n';
    }
}

}  // namespace driftguard
