#include "chartgraph/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "chartgraph/error.hpp"

namespace chartgraph {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
  return v;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedInput, "tensor file: " + what);
}

}  // namespace

const Matrix& TensorFile::at(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw Error(ErrorCode::SchemaViolation, "tensor file has no tensor '" + std::string(name) + "'");
}

std::string encode_tensor_file(const TensorFile& file) {
  nlohmann::json header;
  header["format"] = "chartgraph-tensors";
  header["version"] = kTensorFormatVersion;
  header["meta"] = file.meta;
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& t : file.tensors) {
    shapes.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  }
  header["tensors"] = std::move(shapes);
  const std::string header_text = header.dump();

  std::string out(kTensorMagic);
  put_u64(out, header_text.size());
  out += header_text;
  for (const auto& t : file.tensors)
    for (double v : t.value.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

TensorFile decode_tensor_file(std::string_view bytes) {
  if (bytes.size() < kTensorMagic.size() + 8 || bytes.substr(0, kTensorMagic.size()) != kTensorMagic) {
    malformed("bad magic");
  }
  const std::uint64_t header_len = get_u64(bytes, kTensorMagic.size());
  std::size_t pos = kTensorMagic.size() + 8;
  if (header_len > bytes.size() - pos) malformed("truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::parse_error& e) {
    malformed(e.what());
  }
  pos += header_len;
  if (header.value("format", "") != "chartgraph-tensors") malformed("unexpected format tag");
  if (header.value("version", 0) != kTensorFormatVersion) malformed("unsupported version");

  TensorFile file;
  try {
    file.meta = header.at("meta").get<std::map<std::string, std::string>>();
    for (const auto& shape : header.at("tensors")) {
      const auto rows = shape.at("rows").get<std::size_t>();
      const auto cols = shape.at("cols").get<std::size_t>();
      if (rows != 0 && cols > (bytes.size() - pos) / 8 / rows) malformed("truncated payload");
      std::vector<double> data(rows * cols);
      for (double& v : data) {
        v = std::bit_cast<double>(get_u64(bytes, pos));
        pos += 8;
      }
      file.tensors.push_back({shape.at("name").get<std::string>(), Matrix(rows, cols, std::move(data))});
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(e.what());
  }
  if (pos != bytes.size()) malformed("trailing bytes after payload");
  return file;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  write_file(path, encode_tensor_file(file));
}

TensorFile read_tensor_file(const std::filesystem::path& path) { return decode_tensor_file(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::Io, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace chartgraph
