// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace bridgeflow {

/// On-disk tensor: raw little-endian float64 payload in row-major order
/// (<base>.f64) plus a JSON sidecar (<base>.json) carrying the semantic name,
/// dtype tag, shape and a CRC32 of the payload bytes.
struct TensorFile {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;  // row-major

  std::size_t element_count() const;
};

/// CRC-32 (IEEE, reflected) of a byte buffer.
std::uint32_t crc32(const unsigned char* p, std::size_t n);

/// Writes <base>.f64 and <base>.json.  Throws std::invalid_argument when the
/// payload size does not match the shape, std::runtime_error on I/O failure.
void write_tensor(const std::filesystem::path& base, const TensorFile& t);

/// Reads and validates a tensor pair; checks dtype tag, payload length and
/// checksum.  Throws std::runtime_error on any mismatch.
TensorFile read_tensor(const std::filesystem::path& base);

// Eigen conveniences (matrix rows map to the leading tensor dimension).
void write_matrix(const std::filesystem::path& base, const std::string& name,
                  const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& base);
void write_vector(const std::filesystem::path& base, const std::string& name,
                  const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(const std::filesystem::path& base);

}  // namespace bridgeflow
