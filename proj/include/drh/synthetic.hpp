#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "drh/feature_map.hpp"
#include "drh/regions.hpp"

namespace drh::synthetic {

/// Map of i.i.d. uniform [0, 1) activations.
FeatureMap random_map(std::string id, std::uint32_t width, std::uint32_t height,
                      std::uint32_t channels, std::uint32_t stride, std::mt19937_64& rng);

/// A w x h patch whose activations lie in [2, 3), so they dominate any
/// background produced by random_map in every channel.
FeatureMap random_patch(std::uint32_t w, std::uint32_t h, std::uint32_t channels,
                        std::mt19937_64& rng);

/// Copies `patch` verbatim into `fm` with its top-left cell at (x0, y0).
void plant(FeatureMap& fm, const FeatureMap& patch, std::uint32_t x0, std::uint32_t y0);

/// Pixel rectangle covering exactly the cells of `box`.
PixelBox pixel_box(const RegionBox& box, std::uint32_t stride);

}  // namespace drh::synthetic
