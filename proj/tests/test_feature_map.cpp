#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "drh/error.hpp"
#include "drh/feature_map.hpp"
#include "support.hpp"

using namespace drh;

namespace {

std::string serialize(const FeatureMap& fm) {
  std::ostringstream os(std::ios::binary);
  write_feature_map(fm, os);
  return os.str();
}

FeatureMap parse(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_feature_map(is);
}

ErrorCode error_of(const std::string& bytes) {
  try {
    parse(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

constexpr std::size_t header_bytes(std::size_t id_len) { return 4 + 4 * 5 + 4 + id_len; }

}  // namespace

TEST_CASE("2x2x3 map keeps its dimensions through a file") {
  std::mt19937_64 rng(1);
  const auto fm = testutil::random_map("a", 2, 2, 3, 16, rng);
  const auto back = parse(serialize(fm));
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.channels == 3);
  CHECK(back.stride == 16);
  CHECK(back.data.size() == 12);
  CHECK(back == fm);
}

TEST_CASE("payload size follows the header") {
  FeatureMap one("x", 1, 1, 1, 1);
  CHECK(serialize(one).size() == header_bytes(1) + 4);

  FeatureMap big("img", 2, 2, 512, 32);
  CHECK(serialize(big).size() == header_bytes(3) + 2048 * 4);
}

TEST_CASE("header layout is little-endian with the magic first") {
  FeatureMap fm("ab", 3, 2, 1, 8);
  fm.data = {1, 2, 3, 4, 5, 6};
  const auto b = serialize(fm);
  CHECK(b.substr(0, 4) == "DRHF");
  std::uint32_t fields[5];
  std::memcpy(fields, b.data() + 4, sizeof fields);
  CHECK(fields[0] == 1);  // version
  CHECK(fields[1] == 3);
  CHECK(fields[2] == 2);
  CHECK(fields[3] == 1);
  CHECK(fields[4] == 8);
  float last;
  std::memcpy(&last, b.data() + b.size() - 4, 4);
  CHECK(last == 6.0f);
}

TEST_CASE("random maps round-trip bit-exactly") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::uint32_t> dim(1, 9);
    auto fm = testutil::random_map("img_" + std::to_string(trial), dim(rng), dim(rng), dim(rng) * 7,
                                   dim(rng), rng, -1e6f, 1e6f);
    fm.data[0] = -0.0f;
    const auto back = parse(serialize(fm));
    REQUIRE(back.data.size() == fm.data.size());
    CHECK(std::memcmp(back.data.data(), fm.data.data(), fm.data.size() * 4) == 0);
    CHECK(back == fm);
  }

  testutil::TempDir dir("fm");
  auto fm = testutil::random_map("on_disk", 7, 5, 64, 16, rng);
  write_feature_map(fm, dir / "on_disk.drhf");
  CHECK(read_feature_map(dir / "on_disk.drhf") == fm);
}

TEST_CASE("truncated or padded payloads are rejected") {
  std::mt19937_64 rng(3);
  const auto b = serialize(testutil::random_map("t", 3, 3, 4, 16, rng));
  CHECK(error_of(b.substr(0, b.size() - 1)) == ErrorCode::DimensionMismatch);
  CHECK(error_of(b.substr(0, b.size() - 20)) == ErrorCode::DimensionMismatch);
  CHECK(error_of(b + "xxxx") == ErrorCode::DimensionMismatch);
}

TEST_CASE("header damage is reported as malformed") {
  std::mt19937_64 rng(4);
  auto b = serialize(testutil::random_map("t", 2, 2, 2, 16, rng));
  CHECK(error_of(b.substr(0, 10)) == ErrorCode::MalformedHeader);

  auto bad_magic = b;
  bad_magic[0] = 'X';
  CHECK(error_of(bad_magic) == ErrorCode::MalformedHeader);

  auto bad_version = b;
  bad_version[4] = 9;
  CHECK(error_of(bad_version) == ErrorCode::MalformedHeader);
}

TEST_CASE("non-finite activations are rejected") {
  FeatureMap fm("nan", 2, 1, 2, 16);
  fm.data = {0.5f, 0.25f, 1.0f, 2.0f};
  for (float bad : {std::nanf(""), INFINITY, -INFINITY}) {
    auto b = serialize(fm);
    std::memcpy(b.data() + header_bytes(3) + 4, &bad, 4);
    CHECK(error_of(b) == ErrorCode::NonFiniteValue);
  }
  auto writer = fm;
  writer.data[1] = std::nanf("");
  std::ostringstream os;
  CHECK_THROWS_AS(write_feature_map(writer, os), Error);
}

TEST_CASE("zero dimensions are invalid") {
  FeatureMap fm("z", 1, 1, 1, 1);
  fm.width = 0;
  fm.data.clear();
  CHECK_THROWS_AS(fm.validate(), Error);
}

TEST_CASE("feature files are listed in name order") {
  testutil::TempDir dir("list");
  FeatureMap fm("x", 1, 1, 1, 1);
  for (const char* name : {"c.drhf", "a.drhf", "b.drhf"}) write_feature_map(fm, dir / name);
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto files = list_feature_files(dir.path());
  REQUIRE(files.size() == 3);
  CHECK(files[0].filename() == "a.drhf");
  CHECK(files[2].filename() == "c.drhf");
}
