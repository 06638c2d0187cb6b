// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace bridgeflow {

/// Command-line entry point.  `args` excludes the program name:
///   <gen-data|fit-codec|train|forecast|sweep|verify|metrics>
///   [--config PATH] [--set KEY=VALUE]... [--seed N] [--jobs N] [--out DIR]
/// Output root precedence: --out, then config `out_dir`, then $BRIDGEFLOW_OUT,
/// then ./out; each command writes into its own subdirectory together with a
/// manifest.json (command, canonical config, config hash, seed, version).
/// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure,
/// 3 when verify finds a failing check.
int run_cli(const std::vector<std::string>& args);

}  // namespace bridgeflow
