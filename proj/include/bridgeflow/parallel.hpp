// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace bridgeflow {

/// Process-wide worker cap used when a parallel_for call passes jobs = 0.
/// Defaults to 1 (fully serial); the CLI sets it from --jobs.
void set_max_jobs(int jobs);
int max_jobs();

/// Runs fn(i) for every i in [0, n), chunked over at most `jobs` threads
/// (jobs = 0 -> max_jobs()).  Each index must touch only its own outputs;
/// under that discipline results do not depend on the thread count, so
/// callers stay bit-reproducible.  Exceptions from workers are rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int jobs = 0);

}  // namespace bridgeflow
