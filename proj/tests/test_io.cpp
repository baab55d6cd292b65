#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <random>
#include <string>

#include "ftacl/io.hpp"

using namespace ftacl;

namespace {

std::string temp_path(const char* stem) {
  return std::string("io_test_") + stem + ".bin";
}

TensorPtr random_tensor(std::vector<std::size_t> shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 3.0);
  auto t = make_tensor(std::move(shape));
  for (double& v : t->data) v = dist(rng);
  return t;
}

}  // namespace

TEST_CASE("tensor file header layout is exactly as documented") {
  auto t = make_tensor({2, 3}, {1, 2, 3, 4, 5, 6});
  auto bytes = encode_ftt(*t);
  REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 8 + 6 * 8);
  CHECK(std::memcmp(bytes.data(), "FTT1", 4) == 0);
  CHECK(bytes[4] == 1);  // f64
  CHECK(bytes[5] == 2);  // rank
  // little-endian extents 2 and 3
  CHECK(bytes[6] == 2);
  CHECK(bytes[14] == 3);
  double first;
  std::memcpy(&first, bytes.data() + 22, 8);
  CHECK(first == 1.0);
}

TEST_CASE("f64 round-trip is bitwise exact") {
  auto t = random_tensor({4, 7, 3}, 11);
  t->data[0] = -0.0;
  t->data[1] = 1e-300;
  auto path = temp_path("f64");
  write_ftt(path, *t);
  auto back = read_ftt(path);
  REQUIRE(back->shape == t->shape);
  CHECK(back->dtype == Dtype::f64);
  CHECK(std::memcmp(back->data.data(), t->data.data(), t->size() * sizeof(double)) == 0);
  std::remove(path.c_str());
}

TEST_CASE("f32 round-trip narrows then widens consistently") {
  auto t = random_tensor({5, 5}, 3);
  t->dtype = Dtype::f32;
  auto path = temp_path("f32");
  write_ftt(path, *t);
  auto back = read_ftt(path);
  REQUIRE(back->shape == t->shape);
  CHECK(back->dtype == Dtype::f32);
  for (std::size_t i = 0; i < t->size(); ++i) {
    CHECK(back->data[i] == static_cast<double>(static_cast<float>(t->data[i])));
  }
  // a second save of the widened values reproduces the same file
  write_ftt(path + ".2", *back);
  CHECK(read_file_bytes(path) == read_file_bytes(path + ".2"));
  std::remove(path.c_str());
  std::remove((path + ".2").c_str());
}

TEST_CASE("bundle round-trip preserves metadata, names, order and payload bits") {
  Bundle b;
  b.meta["version"] = "1";
  b.meta["task_name"] = "keyword spotting";
  b.put("weights", random_tensor({3, 4}, 21));
  b.put("bias", random_tensor({4}, 22));
  auto path = temp_path("bundle");
  write_bundle(path, b);
  Bundle back = read_bundle(path);
  CHECK(back.meta == b.meta);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].first == "weights");
  CHECK(back.tensors[1].first == "bias");
  CHECK(back.has("bias"));
  CHECK_FALSE(back.has("missing"));
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& orig = *b.tensors[k].second;
    const auto& got = *back.tensors[k].second;
    REQUIRE(got.shape == orig.shape);
    CHECK(std::memcmp(got.data.data(), orig.data.data(), orig.size() * sizeof(double)) == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("every single-byte corruption of a bundle is detected") {
  Bundle b;
  b.meta["kind"] = "test";
  b.put("w", random_tensor({2, 2}, 5));
  auto path = temp_path("tamper");
  write_bundle(path, b);
  auto clean = read_file_bytes(path);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    auto bytes = clean;
    std::size_t pos = std::uniform_int_distribution<std::size_t>(0, bytes.size() - 1)(rng);
    bytes[pos] ^= static_cast<std::uint8_t>(
        std::uniform_int_distribution<int>(1, 255)(rng));
    write_file_bytes(path, bytes);
    CHECK_THROWS_AS(read_bundle(path), IoError);
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated files fail with an IoError, not a crash") {
  auto t = random_tensor({6, 6}, 8);
  auto path = temp_path("trunc");
  write_ftt(path, *t);
  auto full = read_file_bytes(path);
  for (std::size_t keep : {std::size_t{0}, std::size_t{3}, std::size_t{5},
                           std::size_t{12}, full.size() - 1}) {
    std::vector<std::uint8_t> cut(full.begin(), full.begin() + keep);
    write_file_bytes(path, cut);
    CHECK_THROWS_AS(read_ftt(path), IoError);
  }

  Bundle b;
  b.put("w", t);
  write_bundle(path, b);
  full = read_file_bytes(path);
  for (std::size_t keep : {std::size_t{0}, std::size_t{2}, full.size() / 2, full.size() - 1}) {
    std::vector<std::uint8_t> cut(full.begin(), full.begin() + keep);
    write_file_bytes(path, cut);
    CHECK_THROWS_AS(read_bundle(path), IoError);
  }
  std::remove(path.c_str());
}

TEST_CASE("bad magic and bad dtype codes are rejected") {
  auto t = make_tensor({2}, {1.0, 2.0});
  auto bytes = encode_ftt(*t);
  auto path = temp_path("magic");

  auto bad = bytes;
  bad[0] = 'X';
  write_file_bytes(path, bad);
  CHECK_THROWS_AS(read_ftt(path), IoError);

  bad = bytes;
  bad[4] = 9;  // unknown dtype code
  write_file_bytes(path, bad);
  CHECK_THROWS_AS(read_ftt(path), IoError);
  std::remove(path.c_str());
}

TEST_CASE("crc32 matches the reference vector") {
  const char* s = "123456789";
  CHECK(crc32(reinterpret_cast<const std::uint8_t*>(s), 9) == 0xCBF43926u);
  CHECK(crc32(nullptr, 0) == 0u);
}
