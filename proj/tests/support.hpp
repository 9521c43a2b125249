#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "drh/feature_map.hpp"
#include "drh/hashnet.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("drh-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline drh::FeatureMap random_map(const std::string& id, std::uint32_t w, std::uint32_t h,
                                  std::uint32_t c, std::uint32_t stride, std::mt19937_64& rng,
                                  float lo = -1.0f, float hi = 1.0f) {
  drh::FeatureMap fm(id, w, h, c, stride);
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& v : fm.data) v = u(rng);
  return fm;
}

// Two Gaussian clusters at +mu and -mu with unit noise, |mu| = 3 sqrt(C),
// rows shuffled. label[i] says which cluster row i came from.
struct Clusters {
  drh::MatrixRf rows;
  std::vector<int> label;
};

inline Clusters two_clusters(std::size_t per_cluster, std::size_t channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> mu(channels);
  double norm = 0;
  for (auto& m : mu) {
    m = n01(rng);
    norm += m * m;
  }
  for (auto& m : mu) m *= 3.0 * std::sqrt(static_cast<double>(channels)) / std::sqrt(norm);

  std::vector<std::size_t> order(2 * per_cluster);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Clusters out{drh::MatrixRf(static_cast<Eigen::Index>(2 * per_cluster), static_cast<Eigen::Index>(channels)),
               std::vector<int>(2 * per_cluster)};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int lab = order[i] < per_cluster ? 0 : 1;
    out.label[i] = lab;
    for (std::size_t c = 0; c < channels; ++c)
      out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          static_cast<float>((lab == 0 ? mu[c] : -mu[c]) + n01(rng));
  }
  return out;
}

}  // namespace testutil
