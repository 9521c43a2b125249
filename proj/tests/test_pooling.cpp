#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drh/error.hpp"
#include "drh/pooling.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace drh;

TEST_CASE("single cell pools to itself") {
  std::mt19937_64 rng(1);
  const auto fm = testutil::random_map("a", 5, 4, 6, 16, rng);
  const auto got = roi_max_pool(fm, {3, 2, 1, 1});
  const auto cell = fm.cell(2, 3);
  CHECK(std::equal(got.begin(), got.end(), cell.begin(), cell.end()));
}

TEST_CASE("constant map pools to the constant") {
  FeatureMap fm("c", 6, 3, 4, 16);
  std::fill(fm.data.begin(), fm.data.end(), 2.5f);
  for (const auto& b : {RegionBox{0, 0, 6, 3}, RegionBox{2, 1, 3, 2}})
    CHECK(roi_max_pool(fm, b) == std::vector<float>(4, 2.5f));
}

TEST_CASE("4x4x3 box matches a nested-loop scan") {
  std::mt19937_64 rng(2);
  const auto fm = testutil::random_map("r", 4, 4, 3, 16, rng);
  CHECK(roi_max_pool(fm, {1, 1, 2, 2}) == oracle::max_pool(fm, {1, 1, 2, 2}));
}

TEST_CASE("random boxes match the oracle and grow monotonically") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const std::uint32_t w = 1 + rng() % 12, h = 1 + rng() % 12;
    const auto fm = testutil::random_map("r", w, h, 1 + rng() % 20, 16, rng);
    const RegionBox b{static_cast<std::uint32_t>(rng() % w), static_cast<std::uint32_t>(rng() % h), 1, 1};
    RegionBox box = b;
    box.w = 1 + rng() % (w - b.x0);
    box.h = 1 + rng() % (h - b.y0);
    const auto small = roi_max_pool(fm, box);
    CHECK(small == oracle::max_pool(fm, box));

    const auto whole = roi_max_pool(fm, RegionBox::whole(w, h));
    CHECK(whole == oracle::max_pool(fm, RegionBox::whole(w, h)));
    for (std::size_t c = 0; c < small.size(); ++c) CHECK(whole[c] >= small[c]);
  }
}

TEST_CASE("permuting channels permutes the pooled vector") {
  std::mt19937_64 rng(4);
  const auto fm = testutil::random_map("p", 5, 5, 8, 16, rng);
  std::vector<std::uint32_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FeatureMap shuffled = fm;
  for (std::uint32_t y = 0; y < 5; ++y)
    for (std::uint32_t x = 0; x < 5; ++x)
      for (std::uint32_t c = 0; c < 8; ++c) shuffled.cell(y, x)[c] = fm.at(y, x, perm[c]);
  const RegionBox box{1, 0, 3, 4};
  const auto a = roi_max_pool(fm, box), b = roi_max_pool(shuffled, box);
  for (std::uint32_t c = 0; c < 8; ++c) CHECK(b[c] == a[perm[c]]);
}

TEST_CASE("boxes outside the map are refused") {
  FeatureMap fm("o", 3, 3, 2, 16);
  CHECK_THROWS_AS(roi_max_pool(fm, {2, 2, 2, 1}), Error);
  CHECK_THROWS_AS(roi_max_pool(fm, {0, 0, 0, 1}), Error);
  std::vector<float> small(1);
  CHECK_THROWS_AS(roi_max_pool_into(fm, {0, 0, 1, 1}, small), Error);
}

TEST_CASE("l2 normalisation") {
  std::vector<float> v{3, 4};
  l2_normalize(v);
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(v[1] == doctest::Approx(0.8));
  std::vector<float> z(3, 0.0f);
  l2_normalize(z);
  CHECK(z == std::vector<float>(3, 0.0f));
}
