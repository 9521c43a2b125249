#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "drh/index.hpp"

namespace drh {

struct BenchConfig {
  std::size_t trials = 20;
  std::size_t m = 400;
  std::size_t float_dim = 512;  // descriptor dimension of the float baseline
  std::uint64_t seed = 42;
};

struct TimingStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

TimingStats summarize(std::vector<double> samples_ms);

struct BenchReport {
  std::size_t records = 0;
  std::size_t bits = 0;
  std::size_t float_dim = 0;
  std::size_t trials = 0;
  TimingStats hash_scan;
  TimingStats float_scan;

  /// Mean float-scan time over mean hash-scan time; 0 when nothing was timed.
  [[nodiscard]] double speedup() const noexcept {
    return hash_scan.mean_ms > 0.0 ? float_scan.mean_ms / hash_scan.mean_ms : 0.0;
  }
};

/// Baseline: inner product of `query` with each `dim`-wide row of
/// `database`, returning the `m` best (record, score) pairs, highest first.
std::vector<std::pair<std::size_t, float>> float_scan(std::span<const float> database,
                                                      std::size_t dim,
                                                      std::span<const float> query,
                                                      std::size_t m);

/// Times `trials` random queries against the index's global codes, then the
/// same number against random float descriptors, one per index record.
BenchReport run_bench(const HashIndex& index, const BenchConfig& cfg);

/// Index of `records` images with uniformly random global codes and
/// `locals_per_record` random local codes on a 3x3 cell grid.
HashIndex random_index(std::size_t records, std::size_t bits, std::uint64_t seed,
                       std::size_t locals_per_record = 0);

}  // namespace drh
