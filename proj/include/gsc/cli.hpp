// Copyright Contributors to the gsc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace gsc::cli {

/// Toolkit entry point: parses argv, dispatches to one subcommand
/// (synth / rank / prune / compact / split / render / eval / bench) and maps
/// failures to exit codes — 0 success, 1 runtime (I/O) failure, 2 usage or
/// validation error.
int run(int argc, char** argv);

} // namespace gsc::cli
