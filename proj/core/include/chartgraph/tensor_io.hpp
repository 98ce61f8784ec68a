#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "chartgraph/matrix.hpp"

namespace chartgraph {

inline constexpr std::string_view kTensorMagic = "CGTENSR1";
inline constexpr int kTensorFormatVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Layout: 8-byte magic, little-endian u64 header length, JSON header
/// (format, version, meta, tensor names and shapes), then every tensor's
/// values as little-endian binary64, row-major, in header order.
/// Round-trips bit-exactly.
struct TensorFile {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  const Matrix& at(std::string_view name) const;

  friend bool operator==(const TensorFile&, const TensorFile&) = default;
};

std::string encode_tensor_file(const TensorFile& file);
TensorFile decode_tensor_file(std::string_view bytes);

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

/// Whole-file helpers shared by the CLI; throw Error(Io).
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace chartgraph
