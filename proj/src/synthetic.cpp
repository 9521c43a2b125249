#include "drh/synthetic.hpp"

#include <algorithm>

#include "drh/error.hpp"

namespace drh::synthetic {

FeatureMap random_map(std::string id, std::uint32_t width, std::uint32_t height,
                      std::uint32_t channels, std::uint32_t stride, std::mt19937_64& rng) {
  FeatureMap fm(std::move(id), width, height, channels, stride);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  for (auto& v : fm.data) v = uni(rng);
  return fm;
}

FeatureMap random_patch(std::uint32_t w, std::uint32_t h, std::uint32_t channels,
                        std::mt19937_64& rng) {
  FeatureMap p("patch", w, h, channels, 1);
  std::uniform_real_distribution<float> uni(2.0f, 3.0f);
  for (auto& v : p.data) v = uni(rng);
  return p;
}

void plant(FeatureMap& fm, const FeatureMap& patch, std::uint32_t x0, std::uint32_t y0) {
  if (patch.channels != fm.channels || x0 + patch.width > fm.width || y0 + patch.height > fm.height)
    throw Error(ErrorCode::DimensionMismatch, "patch does not fit into " + fm.image_id);
  for (std::uint32_t y = 0; y < patch.height; ++y)
    for (std::uint32_t x = 0; x < patch.width; ++x) {
      const auto src = patch.cell(y, x);
      std::copy(src.begin(), src.end(), fm.cell(y0 + y, x0 + x).begin());
    }
}

PixelBox pixel_box(const RegionBox& box, std::uint32_t stride) {
  const double s = stride;
  return {box.x0 * s, box.y0 * s, box.w * s, box.h * s};
}

}  // namespace drh::synthetic
