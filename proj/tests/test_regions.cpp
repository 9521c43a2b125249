#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "drh/error.hpp"
#include "drh/regions.hpp"
#include "oracles.hpp"

using namespace drh;

TEST_CASE("square image keeps all nine scales") {
  const auto s = window_scales(30, 30, 480, 480, {});
  CHECK(s.size() == 9);
  for (auto want : {WindowScale{30, 30}, WindowScale{15, 15}, WindowScale{10, 10}})
    CHECK(std::find(s.begin(), s.end(), want) != s.end());
}

TEST_CASE("narrow image drops the thinnest widths") {
  const auto s = window_scales(30, 60, 300, 600, {});
  CHECK(s.size() == 6);
  for (const auto& ws : s) CHECK(ws.w != 10);
}

TEST_CASE("wide image drops the flattest heights") {
  const auto s = window_scales(60, 30, 600, 300, {});
  CHECK(s.size() == 6);
  for (const auto& ws : s) CHECK(ws.h != 10);
}

TEST_CASE("tiny maps lose zero scales and duplicates") {
  const auto s = window_scales(2, 2, 32, 32, {});
  CHECK(s.size() == 4);
  const std::set<WindowScale> got(s.begin(), s.end());
  CHECK(got == std::set<WindowScale>{{2, 2}, {2, 1}, {1, 2}, {1, 1}});
}

TEST_CASE("window offsets at half overlap are clamped to the edge") {
  CHECK(window_offsets(6, 3, 0.5) == std::vector<std::uint32_t>{0, 2, 3});
  CHECK(window_offsets(6, 6, 0.5) == std::vector<std::uint32_t>{0});
  CHECK(window_offsets(10, 1, 0.9) == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("6x6 map at lambda 0.5 matches a brute-force placement") {
  SlidingWindowConfig cfg;
  cfg.lambda = 0.5;
  const auto boxes = propose_regions(6, 6, 96, 96, cfg);
  std::set<RegionBox> three;
  for (const auto& b : boxes)
    if (b.w == 3 && b.h == 3) three.insert(b);
  std::set<RegionBox> want;
  for (std::uint32_t y : {0u, 2u, 3u})
    for (std::uint32_t x : {0u, 2u, 3u}) want.insert({x, y, 3, 3});
  CHECK(three == want);
}

TEST_CASE("global box comes first exactly once") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint32_t> dim(1, 40);
  for (int i = 0; i < 50; ++i) {
    const auto w = dim(rng), h = dim(rng);
    const auto boxes = propose_regions(w, h, w * 16, h * 16, {});
    REQUIRE_FALSE(boxes.empty());
    CHECK(boxes.front() == RegionBox::whole(w, h));
    CHECK(std::count(boxes.begin(), boxes.end(), RegionBox::whole(w, h)) == 1);
  }
  SlidingWindowConfig no_global;
  no_global.include_global = false;
  const auto locals = propose_regions(10, 10, 160, 160, no_global);
  CHECK(std::count(locals.begin(), locals.end(), RegionBox::whole(10, 10)) == 0);
}

TEST_CASE("1024x768 image yields about forty local boxes") {
  const auto boxes = propose_regions(64, 48, 1024, 768, {});
  const auto locals = boxes.size() - 1;
  CHECK(locals >= 25);
  CHECK(locals <= 60);
}

TEST_CASE("proposals equal the enumeration oracle on random maps") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::uint32_t> dim(1, 50), px(100, 1500);
  for (int i = 0; i < 200; ++i) {
    const auto w = dim(rng), h = dim(rng), iw = px(rng), ih = px(rng);
    for (double lambda : {0.4, 0.5, 0.6, 0.7}) {
      SlidingWindowConfig cfg;
      cfg.lambda = lambda;
      const auto boxes = propose_regions(w, h, iw, ih, cfg);
      const std::set<RegionBox> got(boxes.begin() + 1, boxes.end());
      CHECK(got.size() == boxes.size() - 1);  // no duplicates
      CHECK(got == oracle::local_boxes(w, h, iw, ih, lambda, 1.0));
    }
  }
}

TEST_CASE("every box is in bounds and smaller lambda never adds boxes") {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::uint32_t> dim(1, 80);
  for (int i = 0; i < 200; ++i) {
    const auto w = dim(rng), h = dim(rng);
    std::size_t prev = 0;
    for (double lambda : {0.4, 0.5, 0.6, 0.7}) {
      SlidingWindowConfig cfg;
      cfg.lambda = lambda;
      const auto boxes = propose_regions(w, h, w * 16, h * 16, cfg);
      for (const auto& b : boxes) CHECK(b.fits(w, h));
      CHECK(boxes.size() >= prev);
      prev = boxes.size();
      CHECK(propose_regions(w, h, w * 16, h * 16, cfg) == boxes);
    }
  }
}

TEST_CASE("bad overlap settings are refused") {
  SlidingWindowConfig cfg;
  cfg.lambda = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.lambda = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("pixel boxes project onto cells") {
  FeatureMap fm("q", 20, 10, 1, 16);
  auto whole = project_bbox({0, 0, 320, 160}, fm);
  CHECK(whole == RegionBox::whole(20, 10));
  CHECK(project_bbox({16, 16, 16, 16}, fm) == RegionBox{1, 1, 1, 1});
  CHECK(project_bbox({8, 8, 4, 4}, fm) == RegionBox{0, 0, 1, 1});
  CHECK(project_bbox({15, 0, 2, 16}, fm) == RegionBox{0, 0, 2, 1});
  CHECK(project_bbox({300, 150, 500, 500}, fm) == RegionBox{18, 9, 2, 1});
}

TEST_CASE("projection oracle on random boxes") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const std::uint32_t w = 1 + rng() % 30, h = 1 + rng() % 30, stride = 1 + rng() % 32;
    const double iw = w * stride, ih = h * stride;
    const double x = u(rng) * iw * 0.9, y = u(rng) * ih * 0.9;
    const double bw = 0.01 + u(rng) * (iw - x), bh = 0.01 + u(rng) * (ih - y);
    const auto got = project_bbox({x, y, bw, bh}, w, h, stride);
    const auto x0 = static_cast<std::uint32_t>(std::floor(x / stride));
    const auto y0 = static_cast<std::uint32_t>(std::floor(y / stride));
    const auto x1 = std::min<std::uint32_t>(w, static_cast<std::uint32_t>(std::ceil((x + bw) / stride)));
    const auto y1 = std::min<std::uint32_t>(h, static_cast<std::uint32_t>(std::ceil((y + bh) / stride)));
    CHECK(got == RegionBox{x0, y0, x1 - x0, y1 - y0});
  }
}

TEST_CASE("degenerate query boxes are refused") {
  FeatureMap fm("q", 4, 4, 1, 16);
  CHECK_THROWS_AS(project_bbox({0, 0, 0, 16}, fm), Error);
  CHECK_THROWS_AS(project_bbox({64, 0, 16, 16}, fm), Error);
  try {
    project_bbox({200, 200, 10, 10}, fm);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyProjection);
  }
}
