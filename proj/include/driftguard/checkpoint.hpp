// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint, all integers and floats little-endian:
//
//   "LRPD"                      4 bytes
//   version                     u16 (= 1)
//   input_dim, hidden, class_emb_dim, time_emb_dim, num_classes, T
//                               6 x u64
//   schedule T, schedule s      u64, f64
//   creation seed               u64
//   w1, b1, w2, b2, class_emb, time_emb
//                               f64 each, row-major, shapes from the arch
//   checksum                    u64, FNV-1a 64 of every preceding byte

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/checksum.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/model.hpp"
#include "driftguard/trainer.hpp"

namespace driftguard {

inline constexpr char kCheckpointMagic[4] = {'L', 'R', 'P', 'D'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelParams params;
    ScheduleSpec schedule;
    std::uint64_t seed = 0;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

class ByteWriter {
public:
    void u16(std::uint16_t v) { put(v, 2); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void raw(const char* p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
    std::vector<unsigned char>& bytes() { return bytes_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const unsigned char> b) : bytes_(b) {}
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    void raw(char* out, std::size_t n) {
        need(n);
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    [[nodiscard]] std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) throw IntegrityError("checkpoint truncated");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<unsigned char> encode_checkpoint(const Checkpoint& ck) {
    detail::ByteWriter w;
    const Arch& a = ck.params.arch;
    w.raw(kCheckpointMagic, 4);
    w.u16(kCheckpointVersion);
    for (std::size_t v : {a.input_dim, a.hidden, a.class_emb_dim, a.time_emb_dim, a.num_classes, a.timesteps}) {
        w.u64(v);
    }
    w.u64(ck.schedule.T);
    w.f64(ck.schedule.offset);
    w.u64(ck.seed);
    ck.params.for_each([&](std::string_view, const Tensor& t) {
        for (double v : t.values) w.f64(v);
    });
    const std::uint64_t sum = fnv1a64(w.bytes());
    w.u64(sum);
    return std::move(w.bytes());
}

inline Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
    if (bytes.size() < 8) throw IntegrityError("checkpoint truncated");
    const std::size_t body = bytes.size() - 8;
    detail::ByteReader tail(bytes.subspan(body));
    const std::uint64_t stored = tail.u64();
    if (fnv1a64(bytes.first(body)) != stored) throw IntegrityError("checkpoint checksum mismatch");

    detail::ByteReader r(bytes.first(body));
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kCheckpointMagic, 4) != 0) throw IntegrityError("not a checkpoint (bad magic)");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion) {
        throw IntegrityError("unsupported checkpoint version " + std::to_string(version));
    }
    Arch a;
    a.input_dim = r.u64();
    a.hidden = r.u64();
    a.class_emb_dim = r.u64();
    a.time_emb_dim = r.u64();
    a.num_classes = r.u64();
    a.timesteps = r.u64();
    try {
        a.validate();
    } catch (const ConfigError& e) {
        throw IntegrityError(std::string("checkpoint architecture invalid: ") + e.what());
    }
    Checkpoint ck;
    ck.schedule.T = r.u64();
    ck.schedule.offset = r.f64();
    ck.seed = r.u64();
    if (ck.schedule.T != a.timesteps) throw IntegrityError("checkpoint schedule length differs from architecture");

    const std::size_t needed = (a.hidden * a.layer_input_dim() + a.hidden + 2 * a.hidden + 2 +
                                a.num_classes * a.class_emb_dim + a.timesteps * a.time_emb_dim) *
                               8;
    if (needed != body - r.pos()) throw IntegrityError("checkpoint payload size does not match architecture");
    ck.params = ModelParams(a);
    ck.params.for_each([&](std::string_view, Tensor& t) {
        for (double& v : t.values) v = r.f64();
    });
    return ck;
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("short write to " + path.string());
}

/// Returns the FNV-1a digest of the written file.
inline std::uint64_t save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    const auto bytes = encode_checkpoint(ck);
    write_file_bytes(path, bytes);
    return fnv1a64(bytes);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    const auto bytes = read_file_bytes(path);
    return decode_checkpoint(bytes);
}

inline std::uint64_t file_hash(const std::filesystem::path& path) { return fnv1a64(read_file_bytes(path)); }

}  // namespace driftguard
