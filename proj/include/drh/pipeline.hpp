#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drh/feature_map.hpp"
#include "drh/hash_code.hpp"
#include "drh/hashnet.hpp"
#include "drh/index.hpp"
#include "drh/regions.hpp"

namespace drh {

enum class Stage {
  GlobalSearch,     // gDRH: Hamming distance to global codes, ascending
  GlobalExpansion,  // gQE: max similarity to top-q global codes, descending
  LocalRerank,      // lDRH: min Hamming distance over local codes, ascending
  LocalExpansion,   // lQE: max similarity to top-q best regions, descending
};

std::string_view to_string(Stage s) noexcept;
[[nodiscard]] constexpr bool is_distance(Stage s) noexcept {
  return s == Stage::GlobalSearch || s == Stage::LocalRerank;
}

struct SearchConfig {
  std::size_t m = 400;  // candidates kept after the global scan
  std::size_t q = 6;    // expansion depth
  bool use_gqe = true;
  bool use_lqe = true;

  void validate() const;
};

/// Scores an entry accumulated while passing through the stages.
struct StageScores {
  std::optional<std::uint32_t> global_distance;
  std::optional<double> global_expansion;
  std::optional<std::uint32_t> local_distance;
  std::optional<double> local_expansion;

  friend bool operator==(const StageScores&, const StageScores&) = default;
};

struct RankedEntry {
  std::size_t record = 0;  // position in the index
  std::string image_id;
  double score = 0.0;      // meaning depends on the list's stage
  std::optional<RegionBox> best_box;
  // Local region that matched the query in lDRH; empty when the image has no
  // local regions and its global code stood in.
  std::optional<std::size_t> best_local;
  StageScores stages;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct RankedList {
  Stage stage = Stage::GlobalSearch;
  std::vector<RankedEntry> entries;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] std::vector<std::string> image_ids() const;

  friend bool operator==(const RankedList&, const RankedList&) = default;
};

/// gDRH: the top cfg.m images by global-code distance.
RankedList gdrh(const HashIndex& index, const HashCode& query, const SearchConfig& cfg);

/// gQE: re-orders `first` by max similarity of each global code to the
/// global codes of its top cfg.q entries. Membership is unchanged.
RankedList gqe(const HashIndex& index, const RankedList& first, const SearchConfig& cfg);

/// lDRH: re-orders `candidates` by min distance between `query` and each
/// image's local codes (global code when an image has none).
RankedList ldrh(const HashIndex& index, const RankedList& candidates, const HashCode& query);

/// lQE: expansion set = best-matched region codes of the top cfg.q entries of
/// `reranked`; each image scores the max similarity of any of its local codes
/// to any expansion code.
RankedList lqe(const HashIndex& index, const RankedList& reranked, const SearchConfig& cfg);

/// encode(roi_max_pool(fm, project_bbox(bbox))).
HashCode query_code(const FeatureMap& fm, const PixelBox& bbox, const HashLayerParams& params);

/// Every intermediate list of one query.
struct SearchTrace {
  HashCode query;
  RankedList global;
  std::optional<RankedList> global_expanded;
  RankedList local;
  std::optional<RankedList> local_expanded;

  [[nodiscard]] const RankedList& final_list() const noexcept {
    return local_expanded ? *local_expanded : local;
  }
};

/// Runs the stages on an already encoded query. The expansion depth is capped
/// at the candidate count so small indexes still work.
SearchTrace search_code(const HashIndex& index, const HashCode& query, const SearchConfig& cfg);

SearchTrace search_trace(const HashIndex& index, const FeatureMap& query_map, const PixelBox& bbox,
                         const HashLayerParams& params, const SearchConfig& cfg);

RankedList search(const HashIndex& index, const FeatureMap& query_map, const PixelBox& bbox,
                  const HashLayerParams& params, const SearchConfig& cfg);

}  // namespace drh
