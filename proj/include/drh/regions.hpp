#pragma once

#include <cstdint>
#include <vector>

#include "drh/feature_map.hpp"

namespace drh {

/// Rectangle in feature-map cell coordinates; (x0, y0) inclusive, w/h in cells.
struct RegionBox {
  std::uint32_t x0 = 0;
  std::uint32_t y0 = 0;
  std::uint32_t w = 1;
  std::uint32_t h = 1;

  [[nodiscard]] bool fits(std::uint32_t width_c, std::uint32_t height_c) const noexcept {
    return w >= 1 && h >= 1 && x0 + w <= width_c && y0 + h <= height_c;
  }
  [[nodiscard]] bool contains(const RegionBox& o) const noexcept {
    return o.x0 >= x0 && o.y0 >= y0 && o.x0 + o.w <= x0 + w && o.y0 + o.h <= y0 + h;
  }
  static RegionBox whole(std::uint32_t width_c, std::uint32_t height_c) noexcept {
    return {0, 0, width_c, height_c};
  }

  friend auto operator<=>(const RegionBox&, const RegionBox&) = default;
};

struct SlidingWindowConfig {
  double lambda = 0.6;            // overlap fraction between neighbouring placements
  double aspect_threshold = 1.0;  // narrow-scale filter threshold
  bool include_global = true;

  void validate() const;
};

struct WindowScale {
  std::uint32_t w;
  std::uint32_t h;
  friend auto operator<=>(const WindowScale&, const WindowScale&) = default;
};

/// Image-pixel bounding box, as found in query ground-truth files.
struct PixelBox {
  double x = 0, y = 0, w = 0, h = 0;
};

/// Candidate window sizes for a `width_c` x `height_c` map of an `img_w` x
/// `img_h` image.
///
/// Widths come from {W, W/2, W/3} and heights from {H, H/2, H/3} (floor).
/// When the image is strictly narrower than `aspect_threshold` (img_w/img_h <
/// th) the W/3 widths are dropped; symmetrically for heights. Zero-sized and
/// duplicate scales are removed. Order: width-major over the list above.
std::vector<WindowScale> window_scales(std::uint32_t width_c, std::uint32_t height_c,
                                       std::uint32_t img_w, std::uint32_t img_h,
                                       const SlidingWindowConfig& cfg);

/// Start offsets of a window of extent `win` sliding over `extent` cells.
/// The last placement is clamped so the far edge is always covered.
std::vector<std::uint32_t> window_offsets(std::uint32_t extent, std::uint32_t win, double lambda);

/// Sliding-window proposals over `fm`. Global box first (when enabled), then
/// scale-major, y-major, x-major; no duplicates.
std::vector<RegionBox> propose_regions(std::uint32_t width_c, std::uint32_t height_c,
                                       std::uint32_t img_w, std::uint32_t img_h,
                                       const SlidingWindowConfig& cfg);
std::vector<RegionBox> propose_regions(const FeatureMap& fm, std::uint32_t img_w,
                                       std::uint32_t img_h, const SlidingWindowConfig& cfg);

/// Pixel box -> cell box: floor of the top-left, ceiling of the bottom-right,
/// clamped to the map. Throws EmptyProjection if nothing is left.
RegionBox project_bbox(const PixelBox& bbox, const FeatureMap& fm);
RegionBox project_bbox(const PixelBox& bbox, std::uint32_t width_c, std::uint32_t height_c,
                       std::uint32_t stride);

}  // namespace drh
