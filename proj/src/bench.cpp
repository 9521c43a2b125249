#include "drh/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <string>

namespace drh {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

HashCode random_code(std::size_t bits, std::mt19937_64& rng) {
  HashCode c(bits);
  for (std::size_t i = 0; i < bits; ++i)
    if (rng() & 1u) c.set(i);
  return c;
}

// Keeps results alive so the optimizer cannot drop the timed work.
volatile std::size_t g_sink = 0;

}  // namespace

TimingStats summarize(std::vector<double> samples_ms) {
  TimingStats s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  const auto n = samples_ms.size();
  s.mean_ms = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / static_cast<double>(n);
  s.median_ms = n % 2 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  return s;
}

std::vector<std::pair<std::size_t, float>> float_scan(std::span<const float> database,
                                                      std::size_t dim,
                                                      std::span<const float> query,
                                                      std::size_t m) {
  const std::size_t n = dim == 0 ? 0 : database.size() / dim;
  std::vector<std::pair<std::size_t, float>> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row = database.data() + i * dim;
    float dot = 0.0f;
    for (std::size_t k = 0; k < dim; ++k) dot += row[k] * query[k];
    scored[i] = {i, dot};
  }
  m = std::min(m, n);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(m), scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  scored.resize(m);
  return scored;
}

BenchReport run_bench(const HashIndex& index, const BenchConfig& cfg) {
  BenchReport rep;
  rep.records = index.size();
  rep.bits = index.bits();
  rep.float_dim = cfg.float_dim;
  rep.trials = cfg.trials;
  if (index.empty() || cfg.trials == 0) return rep;

  std::mt19937_64 rng(cfg.seed);
  std::vector<double> hash_ms, float_ms;
  hash_ms.reserve(cfg.trials);
  float_ms.reserve(cfg.trials);

  // One untimed warm-up query per method; the rest are timed.
  g_sink = g_sink + scan_global(index, random_code(index.bits(), rng), cfg.m).size();
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto q = random_code(index.bits(), rng);
    const auto t0 = Clock::now();
    const auto hits = scan_global(index, q, cfg.m);
    hash_ms.push_back(elapsed_ms(t0));
    g_sink = g_sink + hits.size();
  }

  if (cfg.float_dim > 0) {
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    std::vector<float> database(index.size() * cfg.float_dim);
    for (auto& v : database) v = uni(rng);
    std::vector<float> q(cfg.float_dim);
    for (auto& v : q) v = uni(rng);
    g_sink = g_sink + float_scan(database, cfg.float_dim, q, cfg.m).size();
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      for (auto& v : q) v = uni(rng);
      const auto t0 = Clock::now();
      const auto hits = float_scan(database, cfg.float_dim, q, cfg.m);
      float_ms.push_back(elapsed_ms(t0));
      g_sink = g_sink + hits.size();
    }
  }

  rep.hash_scan = summarize(std::move(hash_ms));
  rep.float_scan = summarize(std::move(float_ms));
  return rep;
}

HashIndex random_index(std::size_t records, std::size_t bits, std::uint64_t seed,
                       std::size_t locals_per_record) {
  std::mt19937_64 rng(seed);
  HashIndex index(bits);
  for (std::size_t i = 0; i < records; ++i) {
    IndexRecord r;
    r.image_id = "img" + std::to_string(i);
    r.width_c = 3;
    r.height_c = 3;
    r.global_code = random_code(bits, rng);
    for (std::size_t k = 0; k < locals_per_record; ++k) {
      const auto cell = static_cast<std::uint32_t>(k % 9);
      r.locals.push_back({RegionBox{cell % 3, cell / 3, 1, 1}, random_code(bits, rng)});
    }
    index.add(std::move(r));
  }
  return index;
}

}  // namespace drh
