// Copyright (c) 2026, The driftguard authors
// SPDX-License-Identifier: Apache-2.0

#include "driftguard/commands.hpp"

int main(int argc, char** argv) { return driftguard::cli::run_cli(argc, argv); }
