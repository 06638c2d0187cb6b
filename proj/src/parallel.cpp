// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/parallel.hpp"

#include <atomic>
#include <exception>
#include <stdexcept>
#include <thread>
#include <vector>

namespace bridgeflow {

namespace {
std::atomic<int> g_max_jobs{1};
}

void set_max_jobs(int jobs) {
  if (jobs < 1) throw std::invalid_argument("set_max_jobs: jobs must be >= 1");
  g_max_jobs.store(jobs);
}

int max_jobs() { return g_max_jobs.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int jobs) {
  if (jobs <= 0) jobs = max_jobs();
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace bridgeflow
