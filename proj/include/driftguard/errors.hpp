// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace driftguard {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    Ok = 0,
    UserError = 2,
    RuntimeFailure = 3,
    IntegrityFailure = 4,
};

/// Base of every error raised by the library. Each subclass carries the exit
/// code the CLI reports for it.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, ExitCode code) : std::runtime_error(what), code_(code) {}
    [[nodiscard]] ExitCode exit_code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Invalid architecture, config file, or flag combination.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, ExitCode::UserError) {}
};

/// Caller passed an out-of-range index, empty batch or mismatched shapes.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what, ExitCode::UserError) {}
};

/// Non-finite loss, gradient or sampler state.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& what) : Error(what, ExitCode::RuntimeFailure) {}
};

/// Checkpoint magic, version or checksum failed to verify.
class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& what) : Error(what, ExitCode::IntegrityFailure) {}
};

/// Broken internal contract (e.g. a cache from a different architecture).
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(what, ExitCode::RuntimeFailure) {}
};

}  // namespace driftguard
