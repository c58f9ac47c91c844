// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

#include "driftguard/model.hpp"

namespace driftguard {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

/// FNV-1a, 64-bit. Every step is a bijection of the running state, so any
/// single-byte change in the input changes the digest.
inline std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t h = kFnvOffset) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()), h);
}

/// Digest of every parameter value's bit pattern, in declared tensor order.
inline std::uint64_t params_checksum(const ModelParams& p) {
    std::uint64_t h = kFnvOffset;
    p.for_each([&](std::string_view, const Tensor& t) {
        for (double v : t.values) {
            std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
            unsigned char le[8];
            for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(bits >> (8 * i));
            h = fnv1a64(std::span<const unsigned char>(le, 8), h);
        }
    });
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace driftguard
