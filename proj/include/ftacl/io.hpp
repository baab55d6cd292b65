#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ftacl/tensor.hpp"

namespace ftacl {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Portable tensor file: magic "FTT1", u8 dtype code (0=f32, 1=f64), u8 rank,
/// little-endian u64 extents, then the row-major little-endian payload.
std::vector<std::uint8_t> encode_ftt(const Tensor& t);
TensorPtr decode_ftt(const std::uint8_t* bytes, std::size_t len, std::size_t* consumed = nullptr);

void write_ftt(const std::string& path, const Tensor& t);
TensorPtr read_ftt(const std::string& path);

/// Checkpoint bundle: magic "FTB1", a string-keyed metadata section, named
/// FTT1 tensors, and a trailing CRC32 over everything before it. Load rejects
/// files whose checksum does not match.
struct Bundle {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, TensorPtr>> tensors;

  void put(const std::string& name, const TensorPtr& t) { tensors.emplace_back(name, t); }
  TensorPtr get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void write_bundle(const std::string& path, const Bundle& b);
Bundle read_bundle(const std::string& path);

std::uint32_t crc32(const std::uint8_t* bytes, std::size_t len, std::uint32_t seed = 0);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace ftacl
