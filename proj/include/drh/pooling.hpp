#pragma once

#include <span>
#include <vector>

#include "drh/feature_map.hpp"
#include "drh/regions.hpp"

namespace drh {

/// Fixed-length region descriptor: one value per feature-map channel.
using RoiDescriptor = std::vector<float>;

/// Channel-wise max over every cell of `box`. `box` must fit inside `fm`.
RoiDescriptor roi_max_pool(const FeatureMap& fm, const RegionBox& box);

/// Writes the pooled descriptor into `out` (size == fm.channels) without allocating.
void roi_max_pool_into(const FeatureMap& fm, const RegionBox& box, std::span<float> out);

/// In-place L2 normalisation; zero vectors are left untouched. Only the float
/// baseline scan uses this, the hash layer consumes raw pooled activations.
void l2_normalize(std::span<float> v);

}  // namespace drh
