// SPDX-License-Identifier: Apache-2.0
#include "bridgeflow/tensorfile.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bridgeflow {

namespace {

void require_little_endian() {
  if constexpr (std::endian::native != std::endian::little) {
    throw std::runtime_error("tensorfile: big-endian hosts are not supported");
  }
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k)
        c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

}  // namespace

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

std::uint32_t crc32(const unsigned char* p, std::size_t n) {
  const auto& table = crc_table();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) c = table[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

void write_tensor(const std::filesystem::path& base, const TensorFile& t) {
  require_little_endian();
  if (t.shape.empty())
    throw std::invalid_argument("tensorfile: shape must have at least 1 dim");
  for (std::size_t s : t.shape)
    if (s == 0) throw std::invalid_argument("tensorfile: zero-sized dimension");
  if (t.data.size() != t.element_count())
    throw std::invalid_argument("tensorfile: payload size does not match shape");

  const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
  const std::size_t nbytes = t.data.size() * sizeof(double);

  std::filesystem::path payload = base;
  payload += ".f64";
  {
    std::ofstream out(payload, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("tensorfile: cannot open " + payload.string());
    out.write(reinterpret_cast<const char*>(bytes),
              static_cast<std::streamsize>(nbytes));
    if (!out) throw std::runtime_error("tensorfile: write failed: " + payload.string());
  }

  nlohmann::json meta;
  meta["name"] = t.name;
  meta["dtype"] = "f64le";
  meta["shape"] = t.shape;
  meta["crc32"] = crc32(bytes, nbytes);
  std::filesystem::path sidecar = base;
  sidecar += ".json";
  std::ofstream out(sidecar, std::ios::trunc);
  if (!out) throw std::runtime_error("tensorfile: cannot open " + sidecar.string());
  out << meta.dump(2) << "\n";
  if (!out) throw std::runtime_error("tensorfile: write failed: " + sidecar.string());
}

TensorFile read_tensor(const std::filesystem::path& base) {
  require_little_endian();
  std::filesystem::path sidecar = base;
  sidecar += ".json";
  std::ifstream meta_in(sidecar);
  if (!meta_in)
    throw std::runtime_error("tensorfile: missing sidecar " + sidecar.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("tensorfile: bad sidecar " + sidecar.string() +
                             ": " + e.what());
  }
  if (meta.value("dtype", "") != "f64le")
    throw std::runtime_error("tensorfile: unsupported dtype in " + sidecar.string());

  TensorFile t;
  t.name = meta.value("name", "");
  t.shape = meta.at("shape").get<std::vector<std::size_t>>();
  const std::uint32_t want_crc = meta.at("crc32").get<std::uint32_t>();

  std::filesystem::path payload = base;
  payload += ".f64";
  std::ifstream in(payload, std::ios::binary | std::ios::ate);
  if (!in)
    throw std::runtime_error("tensorfile: missing payload " + payload.string());
  const std::size_t nbytes = static_cast<std::size_t>(in.tellg());
  if (nbytes != t.element_count() * sizeof(double))
    throw std::runtime_error("tensorfile: payload length does not match shape: " +
                             payload.string());
  t.data.resize(t.element_count());
  in.seekg(0);
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(nbytes));
  if (!in) throw std::runtime_error("tensorfile: read failed: " + payload.string());

  const auto got_crc =
      crc32(reinterpret_cast<const unsigned char*>(t.data.data()), nbytes);
  if (got_crc != want_crc)
    throw std::runtime_error("tensorfile: checksum mismatch: " + payload.string());
  return t;
}

void write_matrix(const std::filesystem::path& base, const std::string& name,
                  const Eigen::MatrixXd& m) {
  TensorFile t;
  t.name = name;
  t.shape = {static_cast<std::size_t>(m.rows()),
             static_cast<std::size_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  // row-major payload
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      t.data[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  write_tensor(base, t);
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& base) {
  const TensorFile t = read_tensor(base);
  if (t.shape.size() != 2)
    throw std::runtime_error("tensorfile: expected rank-2 tensor at " +
                             base.string());
  const auto rows = static_cast<Eigen::Index>(t.shape[0]);
  const auto cols = static_cast<Eigen::Index>(t.shape[1]);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = t.data[static_cast<std::size_t>(r * cols + c)];
  return m;
}

void write_vector(const std::filesystem::path& base, const std::string& name,
                  const Eigen::VectorXd& v) {
  TensorFile t;
  t.name = name;
  t.shape = {static_cast<std::size_t>(v.size())};
  t.data.assign(v.data(), v.data() + v.size());
  write_tensor(base, t);
}

Eigen::VectorXd read_vector(const std::filesystem::path& base) {
  const TensorFile t = read_tensor(base);
  if (t.shape.size() != 1)
    throw std::runtime_error("tensorfile: expected rank-1 tensor at " +
                             base.string());
  return Eigen::Map<const Eigen::VectorXd>(t.data.data(),
                                           static_cast<Eigen::Index>(t.data.size()));
}

}  // namespace bridgeflow
