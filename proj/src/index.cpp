#include "drh/index.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <thread>

#include <atomic>

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define DRH_X86_DISPATCH 1
#include <immintrin.h>
#endif

#include "binary_io.hpp"
#include "drh/error.hpp"
#include "drh/pooling.hpp"

namespace drh {

namespace {
constexpr char kMagic[5] = "DRHI";
constexpr std::uint32_t kVersion = 1;

// Distances of every packed code to `q`. Fixed word
// counts let the compiler unroll (and vectorize) the inner popcount loop.
template <std::size_t NW>
void distances_fixed(const std::uint64_t* codes, const std::uint64_t* q, std::size_t n,
                     std::uint32_t* dist) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* c = codes + i * NW;
    std::uint32_t d = 0;
    for (std::size_t k = 0; k < NW; ++k) d += static_cast<std::uint32_t>(std::popcount(c[k] ^ q[k]));
    dist[i] = d;
  }
}

void distances_any(const std::uint64_t* codes, const std::uint64_t* q, std::size_t n, std::size_t nw,
                   std::uint32_t* dist) {
  for (std::size_t i = 0; i < n; ++i) dist[i] = hamming_words(codes + i * nw, q, nw);
}

#ifdef DRH_X86_DISPATCH
// Same loop, but compiled so std::popcount becomes the POPCNT instruction
// even when the translation unit targets baseline x86-64.
template <std::size_t NW>
__attribute__((target("popcnt"))) void distances_popcnt(const std::uint64_t* codes, const std::uint64_t* q,
                                                        std::size_t n, std::uint32_t* dist) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* c = codes + i * NW;
    std::uint32_t d = 0;
    for (std::size_t k = 0; k < NW; ++k) d += static_cast<std::uint32_t>(std::popcount(c[k] ^ q[k]));
    dist[i] = d;
  }
}

__attribute__((target("popcnt"))) void distances_popcnt_any(const std::uint64_t* codes, const std::uint64_t* q,
                                                            std::size_t n, std::size_t nw, std::uint32_t* dist) {
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* c = codes + i * nw;
    std::uint32_t d = 0;
    for (std::size_t k = 0; k < nw; ++k) d += static_cast<std::uint32_t>(std::popcount(c[k] ^ q[k]));
    dist[i] = d;
  }
}

// Codes whose word count is a multiple of 8 are processed one 512-bit lane at a time.
template <std::size_t NW>
__attribute__((target("avx512f,avx512vpopcntdq"))) void distances_avx512(const std::uint64_t* codes,
                                                                          const std::uint64_t* q, std::size_t n,
                                                                          std::uint32_t* dist) {
  static_assert(NW % 8 == 0);
  __m512i qv[NW / 8];
  for (std::size_t k = 0; k < NW / 8; ++k) qv[k] = _mm512_loadu_si512(q + 8 * k);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* c = codes + i * NW;
    __m512i acc = _mm512_setzero_si512();
    for (std::size_t k = 0; k < NW / 8; ++k) {
      const __m512i x = _mm512_xor_si512(_mm512_loadu_si512(c + 8 * k), qv[k]);
      acc = _mm512_add_epi64(acc, _mm512_popcnt_epi64(x));
    }
    dist[i] = static_cast<std::uint32_t>(_mm512_reduce_add_epi64(acc));
  }
}
#endif

std::vector<detail::ScanKernel> detect_kernels() {
  std::vector<detail::ScanKernel> k{detail::ScanKernel::Generic};
#ifdef DRH_X86_DISPATCH
  __builtin_cpu_init();
  if (__builtin_cpu_supports("popcnt")) k.push_back(detail::ScanKernel::Popcnt);
  if (__builtin_cpu_supports("avx512f") && __builtin_cpu_supports("avx512vpopcntdq"))
    k.push_back(detail::ScanKernel::Avx512);
#endif
  return k;
}

const std::vector<detail::ScanKernel>& supported_kernels() {
  static const auto k = detect_kernels();
  return k;
}

std::atomic<detail::ScanKernel> active_kernel{supported_kernels().back()};

void distances(const std::uint64_t* codes, const std::uint64_t* q, std::size_t n, std::size_t nw,
               std::uint32_t* dist) {
  switch (active_kernel.load(std::memory_order_relaxed)) {
#ifdef DRH_X86_DISPATCH
    case detail::ScanKernel::Avx512:
      switch (nw) {
        case 8: return distances_avx512<8>(codes, q, n, dist);
        case 16: return distances_avx512<16>(codes, q, n, dist);
        case 32: return distances_avx512<32>(codes, q, n, dist);
        case 64: return distances_avx512<64>(codes, q, n, dist);
        default: break;
      }
      [[fallthrough]];
    case detail::ScanKernel::Popcnt:
      switch (nw) {
        case 1: return distances_popcnt<1>(codes, q, n, dist);
        case 2: return distances_popcnt<2>(codes, q, n, dist);
        case 4: return distances_popcnt<4>(codes, q, n, dist);
        case 8: return distances_popcnt<8>(codes, q, n, dist);
        case 16: return distances_popcnt<16>(codes, q, n, dist);
        default: return distances_popcnt_any(codes, q, n, nw, dist);
      }
#endif
    default:
      switch (nw) {
        case 1: return distances_fixed<1>(codes, q, n, dist);
        case 2: return distances_fixed<2>(codes, q, n, dist);
        case 4: return distances_fixed<4>(codes, q, n, dist);
        case 8: return distances_fixed<8>(codes, q, n, dist);
        case 16: return distances_fixed<16>(codes, q, n, dist);
        default: return distances_any(codes, q, n, nw, dist);
      }
  }
}

// Neighbouring distances cluster around bits/2, so a single histogram would
// serialize on a handful of counters; four interleaved ones are summed at the end.
std::vector<std::size_t> histogram(std::span<const std::uint32_t> dist, std::size_t bins) {
  std::vector<std::size_t> h(4 * bins, 0);
  const std::size_t n = dist.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    ++h[dist[i]];
    ++h[bins + dist[i + 1]];
    ++h[2 * bins + dist[i + 2]];
    ++h[3 * bins + dist[i + 3]];
  }
  for (; i < n; ++i) ++h[dist[i]];
  for (std::size_t b = 0; b < bins; ++b) h[b] += h[bins + b] + h[2 * bins + b] + h[3 * bins + b];
  h.resize(bins);
  return h;
}
}  // namespace

namespace detail {

std::span<const ScanKernel> available_scan_kernels() { return supported_kernels(); }

ScanKernel scan_kernel() noexcept { return active_kernel.load(); }

void use_scan_kernel(ScanKernel k) {
  const auto& ok = supported_kernels();
  if (std::find(ok.begin(), ok.end(), k) == ok.end())
    throw Error(ErrorCode::InvalidArgument, "scan kernel not supported on this CPU");
  active_kernel.store(k);
}

}  // namespace detail

void HashIndex::add(IndexRecord record) {
  auto check = [&](const HashCode& c) {
    if (c.size() != bits_)
      throw Error(ErrorCode::LengthMismatch, "record " + record.image_id + " has a " +
                                                 std::to_string(c.size()) + "-bit code, index holds " +
                                                 std::to_string(bits_));
  };
  check(record.global_code);
  for (const auto& l : record.locals) {
    check(l.code);
    if (!l.box.fits(record.width_c, record.height_c))
      throw Error(ErrorCode::DimensionMismatch, "local box outside map of " + record.image_id);
  }
  if (lookup_.contains(record.image_id))
    throw Error(ErrorCode::DuplicateImageId, record.image_id);

  lookup_.emplace(record.image_id, records_.size());
  const auto w = record.global_code.words();
  global_words_.insert(global_words_.end(), w.begin(), w.end());
  records_.push_back(std::move(record));
}

std::optional<std::size_t> HashIndex::find(const std::string& image_id) const {
  const auto it = lookup_.find(image_id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

ImageSize nominal_image_size(const FeatureMap& fm) noexcept {
  return {fm.width * fm.stride, fm.height * fm.stride};
}

IndexRecord encode_feature_map(const FeatureMap& fm, ImageSize image, const HashLayerParams& params,
                               const SlidingWindowConfig& cfg) {
  if (fm.channels != params.channels())
    throw Error(ErrorCode::DimensionMismatch, fm.image_id + " has " + std::to_string(fm.channels) +
                                                  " channels, model expects " +
                                                  std::to_string(params.channels()));
  if (image.width == 0 || image.height == 0) image = nominal_image_size(fm);

  SlidingWindowConfig with_global = cfg;
  with_global.include_global = true;
  const auto boxes = propose_regions(fm, image.width, image.height, with_global);

  MatrixRf pooled(static_cast<Eigen::Index>(boxes.size()), static_cast<Eigen::Index>(fm.channels));
  for (std::size_t i = 0; i < boxes.size(); ++i)
    roi_max_pool_into(fm, boxes[i], {pooled.row(static_cast<Eigen::Index>(i)).data(), fm.channels});
  auto codes = encode_batch(params, pooled);

  IndexRecord rec;
  rec.image_id = fm.image_id;
  rec.width_c = fm.width;
  rec.height_c = fm.height;
  rec.global_code = std::move(codes.front());
  rec.locals.reserve(boxes.size() - 1);
  for (std::size_t i = 1; i < boxes.size(); ++i) rec.locals.push_back({boxes[i], std::move(codes[i])});
  return rec;
}

HashIndex build_index(std::span<const FeatureMap> maps, const HashLayerParams& params,
                      const SlidingWindowConfig& cfg, std::span<const ImageSize> image_sizes,
                      unsigned threads) {
  cfg.validate();
  if (!image_sizes.empty() && image_sizes.size() != maps.size())
    throw Error(ErrorCode::DimensionMismatch, "image size list does not match map count");

  std::vector<IndexRecord> records(maps.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ImageSize sz = image_sizes.empty() ? ImageSize{} : image_sizes[i];
      records[i] = encode_feature_map(maps[i], sz, params, cfg);
    }
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(maps.size())));
  if (threads <= 1) {
    work(0, maps.size());
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    const std::size_t chunk = (maps.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const auto b = std::min(maps.size(), t * chunk);
      const auto e = std::min(maps.size(), b + chunk);
      pool.emplace_back([&, t, b, e] {
        try {
          work(b, e);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  HashIndex index(params.bits());
  for (auto& r : records) index.add(std::move(r));
  return index;
}

std::vector<ScanHit> scan_global(const HashIndex& index, const HashCode& query, std::size_t m) {
  if (query.size() != index.bits())
    throw Error(ErrorCode::LengthMismatch, "query has " + std::to_string(query.size()) +
                                               " bits, index holds " + std::to_string(index.bits()));
  const std::size_t n = index.size();
  m = std::min(m, n);
  if (m == 0) return {};

  const std::size_t nw = index.words_per_code();
  const std::uint64_t* codes = index.packed_global_codes().data();
  const std::uint64_t* q = query.words().data();

  // Distances are bounded by the code length, so top-m selection is a
  // histogram pass followed by a stable bucket fill.
  thread_local std::vector<std::uint32_t> scratch;
  scratch.resize(n);
  const std::span<const std::uint32_t> dist(scratch.data(), n);
  distances(codes, q, n, nw, scratch.data());
  const auto hist = histogram(dist, index.bits() + 2);
  std::size_t cutoff = 0, taken = 0;
  while (taken + hist[cutoff] < m) taken += hist[cutoff++];
  // All distances < cutoff are kept, plus the first (m - taken) at cutoff.
  std::size_t at_cutoff = m - taken;

  std::vector<std::size_t> start(cutoff + 2, 0);
  for (std::size_t d = 0; d < cutoff; ++d) start[d + 1] = start[d] + hist[d];
  start[cutoff + 1] = start[cutoff] + at_cutoff;

  std::vector<ScanHit> out(m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = dist[i];
    if (d < cutoff) {
      out[start[d]++] = {i, d};
    } else if (d == cutoff && at_cutoff > 0) {
      out[start[d]++] = {i, d};
      --at_cutoff;
    }
  }
  return out;
}

void save_index(const HashIndex& index, std::ostream& os) {
  detail::LeWriter w(os);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(index.bits()));
  w.u64(index.size());
  auto put_code = [&](const HashCode& c) {
    for (auto word : c.words()) w.u64(word);
  };
  for (const auto& r : index.records()) {
    w.str(r.image_id);
    w.u32(r.width_c);
    w.u32(r.height_c);
    put_code(r.global_code);
    w.u32(static_cast<std::uint32_t>(r.locals.size()));
    for (const auto& l : r.locals) {
      w.u32(l.box.x0);
      w.u32(l.box.y0);
      w.u32(l.box.w);
      w.u32(l.box.h);
      put_code(l.code);
    }
  }
}

void save_index(const HashIndex& index, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  save_index(index, os);
  os.flush();
  if (!os) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

HashIndex load_index(std::istream& is) {
  detail::LeReader r(is);
  r.magic(kMagic);
  if (const auto v = r.u32(); v != kVersion)
    throw Error(ErrorCode::VersionMismatch, "unsupported DRHI version " + std::to_string(v));
  const auto bits = r.u32();
  const auto count = r.u64();
  HashIndex index(bits);
  const auto nw = HashCode::word_count(bits);
  auto get_code = [&] {
    std::vector<std::uint64_t> words(nw);
    for (auto& word : words) word = r.u64(ErrorCode::MalformedHeader);
    if (nw > 0 && bits % 64 != 0 && (words.back() >> (bits % 64)) != 0)
      throw Error(ErrorCode::MalformedHeader, "non-zero pad bits in stored code");
    return HashCode(bits, std::move(words));
  };
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexRecord rec;
    rec.image_id = r.str();
    rec.width_c = r.u32();
    rec.height_c = r.u32();
    rec.global_code = get_code();
    const auto nlocal = r.u32();
    rec.locals.reserve(std::min<std::uint32_t>(nlocal, 4096));
    for (std::uint32_t j = 0; j < nlocal; ++j) {
      LocalRegion l;
      l.box.x0 = r.u32();
      l.box.y0 = r.u32();
      l.box.w = r.u32();
      l.box.h = r.u32();
      l.code = get_code();
      rec.locals.push_back(std::move(l));
    }
    index.add(std::move(rec));
  }
  if (!r.at_eof()) throw Error(ErrorCode::MalformedHeader, "trailing bytes after DRHI records");
  return index;
}

HashIndex load_index(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return load_index(is);
}

}  // namespace drh
