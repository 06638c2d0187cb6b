// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bridgeflow {

/// Deterministic random stream.
///
/// std::mt19937_64 supplies the raw 64-bit words (its output sequence is fully
/// specified by the standard); the uniform/normal transforms below are written
/// out explicitly instead of going through std::*_distribution, whose
/// algorithms are implementation-defined.  Same seed => bit-identical stream
/// on every platform and build mode.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw (Box-Muller, second value cached).
  double normal();

  /// Uniform integer in [lo, hi], both ends inclusive.  Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Vector of independent standard normals.
  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Stable child-stream seed: mixes a base seed with a stream index so that
/// per-trajectory/per-path/per-member streams are independent of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace bridgeflow
