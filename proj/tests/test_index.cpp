#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <sstream>

#include "drh/bench.hpp"
#include "drh/error.hpp"
#include "drh/index.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drh;

namespace {

std::vector<FeatureMap> random_maps(std::size_t n, std::uint32_t channels, std::mt19937_64& rng) {
  std::vector<FeatureMap> maps;
  std::uniform_int_distribution<std::uint32_t> dim(1, 14);
  for (std::size_t i = 0; i < n; ++i)
    maps.push_back(testutil::random_map("m" + std::to_string(i), dim(rng), dim(rng), channels, 16, rng, 0, 1));
  return maps;
}

std::string index_bytes(const HashIndex& idx) {
  std::ostringstream os(std::ios::binary);
  save_index(idx, os);
  return os.str();
}

HashIndex parse_index(const std::string& b) {
  std::istringstream is(b, std::ios::binary);
  return load_index(is);
}

ErrorCode load_error(const std::string& b) {
  try {
    parse_index(b);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

std::vector<ScanHit> sort_oracle(const HashIndex& idx, const HashCode& q, std::size_t m) {
  std::vector<ScanHit> all;
  for (std::size_t r = 0; r < idx.size(); ++r) all.push_back({r, oracle::bit_hamming(q, idx.record(r).global_code)});
  std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.distance < b.distance; });
  all.resize(std::min(m, all.size()));
  return all;
}

}  // namespace

TEST_CASE("no maps give an empty index") {
  const auto idx = build_index({}, initialize_params(64, 4, 0.01, 1), {});
  CHECK(idx.empty());
  CHECK(idx.bits() == 64);
}

TEST_CASE("single-cell map has a global code and no locals") {
  FeatureMap fm("one", 1, 1, 3, 16);
  fm.data = {0.1f, 0.2f, 0.3f};
  const auto params = initialize_params(32, 3, 1.0, 2);
  const auto rec = encode_feature_map(fm, nominal_image_size(fm), params, {});
  CHECK(rec.global_code == oracle::encode(params, {0.1f, 0.2f, 0.3f}));
  CHECK(rec.locals.empty());
  CHECK(rec.width_c == 1);
}

TEST_CASE("records equal encoding recomputed from scratch") {
  std::mt19937_64 rng(1);
  const auto maps = random_maps(10, 12, rng);
  const auto params = initialize_params(96, 12, 1.0, 3);
  std::vector<ImageSize> sizes;
  for (const auto& fm : maps) sizes.push_back({fm.width * 16, fm.height * 16 + 40});
  const auto idx = build_index(maps, params, {}, sizes);
  REQUIRE(idx.size() == maps.size());
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto& fm = maps[i];
    const auto& rec = idx.record(i);
    CHECK(rec.image_id == fm.image_id);
    CHECK(rec.global_code == oracle::encode(params, oracle::max_pool(fm, RegionBox::whole(fm.width, fm.height))));
    const auto want = oracle::local_boxes(fm.width, fm.height, sizes[i].width, sizes[i].height, 0.6, 1.0);
    std::set<RegionBox> got;
    for (const auto& l : rec.locals) {
      got.insert(l.box);
      CHECK(l.code == oracle::encode(params, oracle::max_pool(fm, l.box)));
    }
    CHECK(got == want);
    CHECK(got.size() == rec.locals.size());
  }
}

TEST_CASE("thread count does not change the index") {
  std::mt19937_64 rng(2);
  const auto maps = random_maps(23, 5, rng);
  const auto params = initialize_params(64, 5, 1.0, 4);
  const auto one = build_index(maps, params, {}, {}, 1);
  for (unsigned t : {2u, 3u, 8u, 64u}) CHECK(build_index(maps, params, {}, {}, t) == one);
}

TEST_CASE("index insertion checks") {
  HashIndex idx(64);
  IndexRecord r{"a", 2, 2, HashCode(64), {}};
  idx.add(r);
  auto code_of = [&](IndexRecord rec) {
    try {
      idx.add(std::move(rec));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code_of(r) == ErrorCode::DuplicateImageId);
  CHECK(code_of({"b", 2, 2, HashCode(32), {}}) == ErrorCode::LengthMismatch);
  CHECK(code_of({"c", 2, 2, HashCode(64), {{{0, 0, 1, 1}, HashCode(65)}}}) == ErrorCode::LengthMismatch);
  CHECK(code_of({"d", 2, 2, HashCode(64), {{{1, 1, 2, 1}, HashCode(64)}}}) == ErrorCode::DimensionMismatch);
  CHECK(idx.size() == 1);
  CHECK(idx.find("a") == 0u);
  CHECK_FALSE(idx.find("zz"));

  std::mt19937_64 rng(3);
  std::vector<FeatureMap> maps{testutil::random_map("x", 2, 2, 2, 16, rng)};
  const std::vector<ImageSize> two(2);
  CHECK_THROWS_AS(build_index(maps, initialize_params(8, 2, 1, 1), {}, two), Error);
}

TEST_CASE("scan finds an exact match first") {
  const auto idx = random_index(300, 256, 5);
  const auto q = idx.record(137).global_code;
  const auto hits = scan_global(idx, q, 10);
  REQUIRE(hits.size() == 10);
  CHECK(hits[0] == ScanHit{137, 0});
}

TEST_CASE("scan over a small index returns everything") {
  const auto idx = random_index(12, 64, 6);
  std::mt19937_64 rng(7);
  const auto q = oracle::random_code(64, rng);
  CHECK(scan_global(idx, q, 12) == sort_oracle(idx, q, 12));
  CHECK(scan_global(idx, q, 1000) == sort_oracle(idx, q, 1000));
  CHECK(scan_global(HashIndex(64), q, 5).empty());
}

TEST_CASE("scan equals a full sort for many lengths and depths") {
  std::mt19937_64 rng(8);
  for (std::size_t bits : {8u, 64u, 100u, 128u, 256u, 512u, 1024u, 2048u}) {
    const auto idx = random_index(1000, bits, bits);
    for (std::size_t m : {1u, 7u, 50u, 400u, 999u, 1000u}) {
      const auto q = oracle::random_code(bits, rng);
      CHECK(scan_global(idx, q, m) == sort_oracle(idx, q, m));
    }
  }
}

TEST_CASE("every popcount kernel agrees with the oracle") {
  const auto before = detail::scan_kernel();
  std::mt19937_64 rng(9);
  for (auto k : detail::available_scan_kernels()) {
    detail::use_scan_kernel(k);
    for (std::size_t bits : {64u, 200u, 512u, 1024u, 4096u}) {
      const auto idx = random_index(300, bits, bits + 3);
      const auto q = oracle::random_code(bits, rng);
      CHECK(scan_global(idx, q, 40) == sort_oracle(idx, q, 40));
    }
  }
  detail::use_scan_kernel(before);
  CHECK(detail::available_scan_kernels().front() == detail::ScanKernel::Generic);
}

TEST_CASE("scan ties keep insertion order") {
  HashIndex idx(64);
  for (int i = 0; i < 20; ++i) idx.add({"r" + std::to_string(i), 1, 1, HashCode(64), {}});
  const auto hits = scan_global(idx, HashCode(64), 5);
  for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == ScanHit{i, 0});
  CHECK_THROWS_AS(scan_global(idx, HashCode(128), 5), Error);
}

TEST_CASE("index files round-trip") {
  CHECK(parse_index(index_bytes(HashIndex(512))) == HashIndex(512));
  for (std::size_t bits : {1u, 64u, 70u, 1024u}) {
    const auto idx = random_index(40, bits, bits + 1, 5);
    const auto back = parse_index(index_bytes(idx));
    CHECK(back == idx);
    CHECK(std::equal(back.packed_global_codes().begin(), back.packed_global_codes().end(),
                     idx.packed_global_codes().begin(), idx.packed_global_codes().end()));
  }
  testutil::TempDir dir("idx");
  const auto idx = random_index(7, 128, 9, 3);
  save_index(idx, dir / "i.drhi");
  CHECK(load_index(dir / "i.drhi") == idx);
}

TEST_CASE("damaged index files are rejected") {
  const auto b = index_bytes(random_index(3, 70, 10, 2));
  auto magic = b;
  magic[0] = 'Q';
  CHECK(load_error(magic) == ErrorCode::MalformedHeader);
  auto version = b;
  version[4] = 7;
  CHECK(load_error(version) == ErrorCode::VersionMismatch);
  CHECK(load_error(b.substr(0, b.size() - 5)) != ErrorCode::InvalidArgument);
  CHECK(load_error(b + "!") != ErrorCode::InvalidArgument);

  // Set a pad bit of the first global code (bit 70 lives in the second word).
  const std::size_t first_code = 4 + 4 + 4 + 8 + 4 + 4 + 4 + 4;  // magic..count, id "img0", w, h
  auto pad = b;
  pad[first_code + 8] = static_cast<char>(pad[first_code + 8] | 0x80);
  CHECK(load_error(pad) == ErrorCode::MalformedHeader);
}
