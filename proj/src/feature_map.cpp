#include "drh/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "drh/error.hpp"

namespace drh {

namespace {
constexpr char kMagic[5] = "DRHF";
constexpr std::uint32_t kVersion = 1;
}  // namespace

FeatureMap::FeatureMap(std::string id, std::uint32_t w, std::uint32_t h, std::uint32_t c,
                       std::uint32_t stride_px)
    : image_id(std::move(id)),
      width(w),
      height(h),
      channels(c),
      stride(stride_px),
      data(static_cast<std::size_t>(w) * h * c, 0.0f) {}

void FeatureMap::validate() const {
  if (width == 0 || height == 0 || channels == 0)
    throw Error(ErrorCode::DimensionMismatch, "feature map dimensions must be positive");
  if (stride == 0) throw Error(ErrorCode::DimensionMismatch, "stride must be >= 1");
  const auto expected = static_cast<std::size_t>(width) * height * channels;
  if (data.size() != expected)
    throw Error(ErrorCode::DimensionMismatch,
                "payload has " + std::to_string(data.size()) + " values, header implies " +
                    std::to_string(expected));
  const auto bad = std::find_if(data.begin(), data.end(), [](float v) { return !std::isfinite(v); });
  if (bad != data.end())
    throw Error(ErrorCode::NonFiniteValue,
                "non-finite value at offset " + std::to_string(bad - data.begin()) + " in " + image_id);
}

void write_feature_map(const FeatureMap& fm, std::ostream& os) {
  fm.validate();
  detail::LeWriter w(os);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(fm.width);
  w.u32(fm.height);
  w.u32(fm.channels);
  w.u32(fm.stride);
  w.str(fm.image_id);
  if constexpr (std::endian::native == std::endian::little) {
    w.bytes(fm.data.data(), fm.data.size() * sizeof(float));
  } else {
    for (float v : fm.data) w.f32(v);
  }
}

void write_feature_map(const FeatureMap& fm, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  write_feature_map(fm, os);
  os.flush();
  if (!os) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

FeatureMap read_feature_map(std::istream& is) {
  detail::LeReader r(is);
  r.magic(kMagic);
  if (const auto v = r.u32(); v != kVersion)
    throw Error(ErrorCode::MalformedHeader, "unsupported DRHF version " + std::to_string(v));
  FeatureMap fm;
  fm.width = r.u32();
  fm.height = r.u32();
  fm.channels = r.u32();
  fm.stride = r.u32();
  fm.image_id = r.str();
  if (fm.width == 0 || fm.height == 0 || fm.channels == 0 || fm.stride == 0)
    throw Error(ErrorCode::MalformedHeader, "zero dimension in DRHF header");

  const auto n = static_cast<std::uint64_t>(fm.width) * fm.height * fm.channels;
  // Refuse absurd sizes before allocating; the payload read below still checks length.
  if (n > (std::numeric_limits<std::uint64_t>::max() / sizeof(float)) || n > (1ull << 34))
    throw Error(ErrorCode::DimensionMismatch, "declared payload too large");
  fm.data.resize(static_cast<std::size_t>(n));
  r.bytes(fm.data.data(), fm.data.size() * sizeof(float), ErrorCode::DimensionMismatch);
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : fm.data)
      v = std::bit_cast<float>(detail::byteswap_if_big(std::bit_cast<std::uint32_t>(v)));
  }
  if (!r.at_eof())
    throw Error(ErrorCode::DimensionMismatch, "trailing bytes after DRHF payload");
  fm.validate();
  return fm;
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return read_feature_map(is);
}

std::vector<std::filesystem::path> list_feature_files(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".drhf") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace drh
