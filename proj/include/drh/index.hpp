#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "drh/feature_map.hpp"
#include "drh/hash_code.hpp"
#include "drh/hashnet.hpp"
#include "drh/regions.hpp"

namespace drh {

struct LocalRegion {
  RegionBox box;
  HashCode code;
  friend bool operator==(const LocalRegion&, const LocalRegion&) = default;
};

struct IndexRecord {
  std::string image_id;
  std::uint32_t width_c = 0;
  std::uint32_t height_c = 0;
  HashCode global_code;
  std::vector<LocalRegion> locals;

  friend bool operator==(const IndexRecord&, const IndexRecord&) = default;
};

/// Original image size in pixels; drives the aspect filter of the proposals.
struct ImageSize {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

/// Append-only store of per-image codes. Global codes are additionally kept
/// in one contiguous word array so the exhaustive scan streams through memory.
class HashIndex {
 public:
  explicit HashIndex(std::size_t bits = 0) : bits_(bits), words_(HashCode::word_count(bits)) {}

  /// Throws LengthMismatch, DimensionMismatch or DuplicateImageId.
  void add(IndexRecord record);

  [[nodiscard]] std::size_t bits() const noexcept { return bits_; }
  [[nodiscard]] std::size_t words_per_code() const noexcept { return words_; }
  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
  [[nodiscard]] const IndexRecord& record(std::size_t i) const { return records_.at(i); }
  [[nodiscard]] std::span<const IndexRecord> records() const noexcept { return records_; }
  [[nodiscard]] std::optional<std::size_t> find(const std::string& image_id) const;
  [[nodiscard]] std::span<const std::uint64_t> packed_global_codes() const noexcept { return global_words_; }

  friend bool operator==(const HashIndex& a, const HashIndex& b) {
    return a.bits_ == b.bits_ && a.records_ == b.records_;
  }

 private:
  std::size_t bits_;
  std::size_t words_;
  std::vector<IndexRecord> records_;
  std::vector<std::uint64_t> global_words_;
  std::unordered_map<std::string, std::size_t> lookup_;
};

/// Image size assumed when none is supplied: the map extent times its stride.
ImageSize nominal_image_size(const FeatureMap& fm) noexcept;

/// Global code from the whole-map box, local codes from every other proposal.
IndexRecord encode_feature_map(const FeatureMap& fm, ImageSize image, const HashLayerParams& params,
                               const SlidingWindowConfig& cfg);

/// One record per map, in input order. `image_sizes` may be empty (nominal
/// sizes are used) or must match `maps` in length. Work is split across up to
/// `threads` workers; output order never depends on the split.
HashIndex build_index(std::span<const FeatureMap> maps, const HashLayerParams& params,
                      const SlidingWindowConfig& cfg, std::span<const ImageSize> image_sizes = {},
                      unsigned threads = 1);

struct ScanHit {
  std::size_t record;
  std::uint32_t distance;
  friend bool operator==(const ScanHit&, const ScanHit&) = default;
};

/// The `m` records with the smallest global-code Hamming distance to `query`,
/// ascending, ties in insertion order.
std::vector<ScanHit> scan_global(const HashIndex& index, const HashCode& query, std::size_t m);

namespace detail {
// Popcount kernel behind scan_global. The best one the CPU supports is picked
// at start-up; tests switch between them to compare against each other.
enum class ScanKernel { Generic, Popcnt, Avx512 };
std::span<const ScanKernel> available_scan_kernels();
ScanKernel scan_kernel() noexcept;
void use_scan_kernel(ScanKernel k);
}  // namespace detail

void save_index(const HashIndex& index, std::ostream& os);
void save_index(const HashIndex& index, const std::filesystem::path& path);
HashIndex load_index(std::istream& is);
HashIndex load_index(const std::filesystem::path& path);

}  // namespace drh
