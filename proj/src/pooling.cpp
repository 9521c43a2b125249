#include "drh/pooling.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

#include "drh/error.hpp"

namespace drh {

void roi_max_pool_into(const FeatureMap& fm, const RegionBox& box, std::span<float> out) {
  if (!box.fits(fm.width, fm.height))
    throw Error(ErrorCode::DimensionMismatch, "region box outside feature map " + fm.image_id);
  if (out.size() != fm.channels)
    throw Error(ErrorCode::DimensionMismatch, "output span does not match channel count");

  std::fill(out.begin(), out.end(), -std::numeric_limits<float>::infinity());
  for (std::uint32_t y = box.y0; y < box.y0 + box.h; ++y) {
    for (std::uint32_t x = box.x0; x < box.x0 + box.w; ++x) {
      const auto c = fm.cell(y, x);
      for (std::size_t k = 0; k < c.size(); ++k) out[k] = std::max(out[k], c[k]);
    }
  }
}

RoiDescriptor roi_max_pool(const FeatureMap& fm, const RegionBox& box) {
  RoiDescriptor out(fm.channels);
  roi_max_pool_into(fm, box, out);
  return out;
}

void l2_normalize(std::span<float> v) {
  double ss = 0.0;
  for (float x : v) ss += static_cast<double>(x) * x;
  if (ss <= 0.0) return;
  const auto inv = static_cast<float>(1.0 / std::sqrt(ss));
  for (float& x : v) x *= inv;
}

}  // namespace drh
