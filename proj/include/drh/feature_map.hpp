#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace drh {

/// Activation grid of one image, stored row-major as (y, x, c).
///
/// `stride` is the number of image pixels per cell along each axis; it is
/// what lets pixel-space query boxes be projected onto the grid.
struct FeatureMap {
  std::string image_id;
  std::uint32_t width = 0;     // cells
  std::uint32_t height = 0;    // cells
  std::uint32_t channels = 0;
  std::uint32_t stride = 1;    // pixels per cell
  std::vector<float> data;

  FeatureMap() = default;
  FeatureMap(std::string id, std::uint32_t w, std::uint32_t h, std::uint32_t c,
             std::uint32_t stride_px);

  [[nodiscard]] std::size_t cell_offset(std::uint32_t y, std::uint32_t x) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * channels;
  }
  [[nodiscard]] std::span<const float> cell(std::uint32_t y, std::uint32_t x) const noexcept {
    return {data.data() + cell_offset(y, x), channels};
  }
  [[nodiscard]] std::span<float> cell(std::uint32_t y, std::uint32_t x) noexcept {
    return {data.data() + cell_offset(y, x), channels};
  }
  [[nodiscard]] float at(std::uint32_t y, std::uint32_t x, std::uint32_t c) const noexcept {
    return data[cell_offset(y, x) + c];
  }

  /// Throws drh::Error (DimensionMismatch / NonFiniteValue) if an invariant is broken.
  void validate() const;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

void write_feature_map(const FeatureMap& fm, std::ostream& os);
void write_feature_map(const FeatureMap& fm, const std::filesystem::path& path);

FeatureMap read_feature_map(std::istream& is);
FeatureMap read_feature_map(const std::filesystem::path& path);

/// All `*.drhf` files under `dir`, sorted by filename so that callers see a
/// deterministic order.
std::vector<std::filesystem::path> list_feature_files(const std::filesystem::path& dir);

}  // namespace drh
