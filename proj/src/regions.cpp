#include "drh/regions.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "drh/error.hpp"

namespace drh {

void SlidingWindowConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw Error(ErrorCode::InvalidArgument, "lambda must lie in [0, 1), got " + std::to_string(lambda));
  if (!(aspect_threshold > 0.0) || !std::isfinite(aspect_threshold))
    throw Error(ErrorCode::InvalidArgument, "aspect threshold must be positive");
}

std::vector<WindowScale> window_scales(std::uint32_t width_c, std::uint32_t height_c,
                                       std::uint32_t img_w, std::uint32_t img_h,
                                       const SlidingWindowConfig& cfg) {
  cfg.validate();
  if (width_c == 0 || height_c == 0 || img_w == 0 || img_h == 0)
    throw Error(ErrorCode::InvalidArgument, "window_scales needs positive dimensions");

  const std::uint32_t widths[3] = {width_c, width_c / 2, width_c / 3};
  const std::uint32_t heights[3] = {height_c, height_c / 2, height_c / 3};
  const double aspect = static_cast<double>(img_w) / img_h;
  const bool drop_narrow_w = aspect < cfg.aspect_threshold;
  const bool drop_narrow_h = 1.0 / aspect < cfg.aspect_threshold;

  std::vector<WindowScale> out;
  for (int i = 0; i < 3; ++i) {
    if (i == 2 && drop_narrow_w) continue;
    for (int j = 0; j < 3; ++j) {
      if (j == 2 && drop_narrow_h) continue;
      const WindowScale s{widths[i], heights[j]};
      if (s.w == 0 || s.h == 0) continue;
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
  }
  return out;
}

std::vector<std::uint32_t> window_offsets(std::uint32_t extent, std::uint32_t win, double lambda) {
  if (win == 0 || win > extent) return {};
  const auto step = static_cast<std::uint32_t>(
      std::max<long>(1, std::lround(static_cast<double>(win) * (1.0 - lambda))));
  const std::uint32_t last = extent - win;
  std::vector<std::uint32_t> out;
  for (std::uint32_t p = 0; p <= last; p += step) out.push_back(p);
  if (out.back() != last) out.push_back(last);
  return out;
}

std::vector<RegionBox> propose_regions(std::uint32_t width_c, std::uint32_t height_c,
                                       std::uint32_t img_w, std::uint32_t img_h,
                                       const SlidingWindowConfig& cfg) {
  const auto scales = window_scales(width_c, height_c, img_w, img_h, cfg);
  const RegionBox global = RegionBox::whole(width_c, height_c);

  std::vector<RegionBox> out;
  std::set<RegionBox> seen;
  if (cfg.include_global) {
    out.push_back(global);
    seen.insert(global);
  }
  for (const auto& s : scales) {
    const auto xs = window_offsets(width_c, s.w, cfg.lambda);
    const auto ys = window_offsets(height_c, s.h, cfg.lambda);
    for (auto y : ys) {
      for (auto x : xs) {
        const RegionBox b{x, y, s.w, s.h};
        // Without the global box in the output, a full-map window is still
        // not a local region.
        if (b == global) continue;
        if (seen.insert(b).second) out.push_back(b);
      }
    }
  }
  return out;
}

std::vector<RegionBox> propose_regions(const FeatureMap& fm, std::uint32_t img_w,
                                       std::uint32_t img_h, const SlidingWindowConfig& cfg) {
  return propose_regions(fm.width, fm.height, img_w, img_h, cfg);
}

RegionBox project_bbox(const PixelBox& bbox, std::uint32_t width_c, std::uint32_t height_c,
                       std::uint32_t stride) {
  if (stride == 0) throw Error(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (!std::isfinite(bbox.x) || !std::isfinite(bbox.y) || !std::isfinite(bbox.w) ||
      !std::isfinite(bbox.h) || bbox.w <= 0.0 || bbox.h <= 0.0)
    throw Error(ErrorCode::EmptyProjection, "bounding box has no area");

  const double s = stride;
  auto clamp_to = [](double v, std::uint32_t hi) {
    return static_cast<std::uint32_t>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  const auto x0 = clamp_to(std::floor(bbox.x / s), width_c);
  const auto y0 = clamp_to(std::floor(bbox.y / s), height_c);
  const auto x1 = clamp_to(std::ceil((bbox.x + bbox.w) / s), width_c);
  const auto y1 = clamp_to(std::ceil((bbox.y + bbox.h) / s), height_c);
  if (x1 <= x0 || y1 <= y0)
    throw Error(ErrorCode::EmptyProjection, "bounding box falls outside the feature map");
  return {x0, y0, x1 - x0, y1 - y0};
}

RegionBox project_bbox(const PixelBox& bbox, const FeatureMap& fm) {
  return project_bbox(bbox, fm.width, fm.height, fm.stride);
}

}  // namespace drh
