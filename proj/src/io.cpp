#include "ftacl/io.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace ftacl {
namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Cursor {
  const std::uint8_t* p;
  std::size_t remaining;

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (remaining < n) throw IoError(std::string("truncated data while reading ") + what);
    const std::uint8_t* r = p;
    p += n;
    remaining -= n;
    return r;
  }
};

std::string get_str(Cursor& c, const char* what) {
  std::uint32_t len = get_u32(c.take(4, what));
  const std::uint8_t* s = c.take(len, what);
  return std::string(reinterpret_cast<const char*>(s), len);
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* bytes, std::size_t len, std::uint32_t seed) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = seed ^ 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ bytes[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

std::vector<std::uint8_t> encode_ftt(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(10 + 8 * t.rank() + 8 * t.size());
  out.insert(out.end(), {'F', 'T', 'T', '1'});
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape) put_u64(out, e);
  if (t.dtype == Dtype::f64) {
    for (double d : t.data) put_f64(out, d);
  } else {
    for (double d : t.data) {
      float f = static_cast<float>(d);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  return out;
}

TensorPtr decode_ftt(const std::uint8_t* bytes, std::size_t len, std::size_t* consumed) {
  Cursor c{bytes, len};
  const std::uint8_t* magic = c.take(4, "FTT1 magic");
  if (std::memcmp(magic, "FTT1", 4) != 0) throw IoError("bad magic, not an FTT1 tensor");
  const std::uint8_t dtype_code = *c.take(1, "dtype");
  if (dtype_code > 1) throw IoError("unknown dtype code " + std::to_string(dtype_code));
  const std::uint8_t rank = *c.take(1, "rank");
  std::vector<std::size_t> shape(rank);
  for (std::uint8_t i = 0; i < rank; ++i) {
    std::uint64_t e = get_u64(c.take(8, "extent"));
    if (e == 0) throw IoError("zero extent in tensor shape");
    shape[i] = static_cast<std::size_t>(e);
  }
  auto t = make_tensor(shape);
  t->dtype = static_cast<Dtype>(dtype_code);
  const std::size_t n = t->size();
  if (t->dtype == Dtype::f64) {
    const std::uint8_t* payload = c.take(8 * n, "f64 payload");
    for (std::size_t i = 0; i < n; ++i) t->data[i] = get_f64(payload + 8 * i);
  } else {
    const std::uint8_t* payload = c.take(4 * n, "f32 payload");
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = get_u32(payload + 4 * i);
      float f;
      std::memcpy(&f, &bits, 4);
      t->data[i] = static_cast<double>(f);
    }
  }
  if (consumed) *consumed = len - c.remaining;
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

void write_ftt(const std::string& path, const Tensor& t) {
  write_file_bytes(path, encode_ftt(t));
}

TensorPtr read_ftt(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return decode_ftt(bytes.data(), bytes.size());
}

TensorPtr Bundle::get(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw IoError("bundle has no tensor named '" + name + "'");
}

bool Bundle::has(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

void write_bundle(const std::string& path, const Bundle& b) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'F', 'T', 'B', '1'});
  put_u32(out, static_cast<std::uint32_t>(b.meta.size()));
  for (const auto& [k, v] : b.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(b.tensors.size()));
  for (const auto& [name, t] : b.tensors) {
    put_str(out, name);
    auto blob = encode_ftt(*t);
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.insert(out.end(), blob.begin(), blob.end());
  }
  put_u32(out, crc32(out.data(), out.size()));
  write_file_bytes(path, out);
}

Bundle read_bundle(const std::string& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() < 8) throw IoError(path + ": too short to be a bundle");
  const std::uint32_t stored = get_u32(bytes.data() + bytes.size() - 4);
  const std::uint32_t actual = crc32(bytes.data(), bytes.size() - 4);
  if (stored != actual) throw IoError(path + ": checksum mismatch, file corrupt");

  Cursor c{bytes.data(), bytes.size() - 4};
  const std::uint8_t* magic = c.take(4, "FTB1 magic");
  if (std::memcmp(magic, "FTB1", 4) != 0) throw IoError(path + ": not an FTB1 bundle");
  Bundle b;
  const std::uint32_t n_meta = get_u32(c.take(4, "meta count"));
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = get_str(c, "meta key");
    b.meta[k] = get_str(c, "meta value");
  }
  const std::uint32_t n_tensors = get_u32(c.take(4, "tensor count"));
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = get_str(c, "tensor name");
    const std::uint32_t blob_len = get_u32(c.take(4, "tensor blob length"));
    const std::uint8_t* blob = c.take(blob_len, "tensor blob");
    b.tensors.emplace_back(name, decode_ftt(blob, blob_len));
  }
  return b;
}

}  // namespace ftacl
