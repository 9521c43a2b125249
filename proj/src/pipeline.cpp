#include "drh/pipeline.hpp"

#include <algorithm>
#include <limits>

#include "drh/error.hpp"
#include "drh/pooling.hpp"

namespace drh {

namespace {

void check_depth(const RankedList& list, std::size_t q) {
  if (q == 0 || q > list.size())
    throw Error(ErrorCode::ExpansionDepthExceedsList,
                "expansion depth " + std::to_string(q) + " with " + std::to_string(list.size()) +
                    " ranked images");
}

const IndexRecord& record_of(const HashIndex& index, const RankedEntry& e) {
  if (e.record >= index.size() || index.record(e.record).image_id != e.image_id)
    throw Error(ErrorCode::UnknownImage, e.image_id + " is not in the index");
  return index.record(e.record);
}

void sort_descending(std::vector<RankedEntry>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score > b.score; });
}

void sort_ascending(std::vector<RankedEntry>& v) {
  std::stable_sort(v.begin(), v.end(),
                   [](const RankedEntry& a, const RankedEntry& b) { return a.score < b.score; });
}

}  // namespace

std::string_view to_string(Stage s) noexcept {
  switch (s) {
    case Stage::GlobalSearch: return "gdrh";
    case Stage::GlobalExpansion: return "gqe";
    case Stage::LocalRerank: return "ldrh";
    case Stage::LocalExpansion: return "lqe";
  }
  return "?";
}

void SearchConfig::validate() const {
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "m must be positive");
  if (q == 0 || q > m) throw Error(ErrorCode::InvalidArgument, "q must lie in [1, m]");
}

std::vector<std::string> RankedList::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.image_id);
  return ids;
}

RankedList gdrh(const HashIndex& index, const HashCode& query, const SearchConfig& cfg) {
  RankedList out{Stage::GlobalSearch, {}};
  const auto hits = scan_global(index, query, cfg.m);
  out.entries.reserve(hits.size());
  for (const auto& h : hits) {
    RankedEntry e;
    e.record = h.record;
    e.image_id = index.record(h.record).image_id;
    e.score = h.distance;
    e.stages.global_distance = h.distance;
    out.entries.push_back(std::move(e));
  }
  return out;
}

RankedList gqe(const HashIndex& index, const RankedList& first, const SearchConfig& cfg) {
  check_depth(first, cfg.q);
  std::vector<const HashCode*> expansion;
  for (std::size_t j = 0; j < cfg.q; ++j) expansion.push_back(&record_of(index, first.entries[j]).global_code);

  RankedList out{Stage::GlobalExpansion, first.entries};
  for (auto& e : out.entries) {
    const auto& g = record_of(index, e).global_code;
    double best = 0.0;
    for (const auto* x : expansion) best = std::max(best, similarity(*x, g));
    e.score = best;
    e.stages.global_expansion = best;
  }
  sort_descending(out.entries);
  return out;
}

RankedList ldrh(const HashIndex& index, const RankedList& candidates, const HashCode& query) {
  if (query.size() != index.bits())
    throw Error(ErrorCode::LengthMismatch, "query code length differs from index");
  RankedList out{Stage::LocalRerank, candidates.entries};
  const auto nw = index.words_per_code();
  for (auto& e : out.entries) {
    const auto& rec = record_of(index, e);
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    std::optional<std::size_t> arg;
    for (std::size_t k = 0; k < rec.locals.size(); ++k) {
      const auto d = hamming_words(rec.locals[k].code.words().data(), query.words().data(), nw);
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    if (arg) {
      e.best_box = rec.locals[*arg].box;
    } else {
      best = hamming(rec.global_code, query);
      e.best_box = RegionBox::whole(rec.width_c, rec.height_c);
    }
    e.best_local = arg;
    e.score = best;
    e.stages.local_distance = best;
  }
  sort_ascending(out.entries);
  return out;
}

RankedList lqe(const HashIndex& index, const RankedList& reranked, const SearchConfig& cfg) {
  check_depth(reranked, cfg.q);
  std::vector<const HashCode*> expansion;
  for (std::size_t j = 0; j < cfg.q; ++j) {
    const auto& e = reranked.entries[j];
    const auto& rec = record_of(index, e);
    expansion.push_back(e.best_local ? &rec.locals.at(*e.best_local).code : &rec.global_code);
  }

  RankedList out{Stage::LocalExpansion, reranked.entries};
  for (auto& e : out.entries) {
    const auto& rec = record_of(index, e);
    double best = 0.0;
    auto consider = [&](const HashCode& r) {
      for (const auto* x : expansion) best = std::max(best, similarity(*x, r));
    };
    if (rec.locals.empty()) {
      consider(rec.global_code);
    } else {
      for (const auto& l : rec.locals) consider(l.code);
    }
    e.score = best;
    e.stages.local_expansion = best;
  }
  sort_descending(out.entries);
  return out;
}

HashCode query_code(const FeatureMap& fm, const PixelBox& bbox, const HashLayerParams& params) {
  const auto cells = project_bbox(bbox, fm);
  return encode(params, roi_max_pool(fm, cells));
}

SearchTrace search_code(const HashIndex& index, const HashCode& query, const SearchConfig& cfg) {
  cfg.validate();
  SearchTrace t;
  t.query = query;
  t.global = gdrh(index, query, cfg);

  SearchConfig eff = cfg;
  eff.q = std::min(cfg.q, t.global.size());
  const bool can_expand = eff.q > 0;

  const RankedList* to_rerank = &t.global;
  if (cfg.use_gqe && can_expand) {
    t.global_expanded = gqe(index, t.global, eff);
    to_rerank = &*t.global_expanded;
  }
  t.local = ldrh(index, *to_rerank, query);
  if (cfg.use_lqe && can_expand) t.local_expanded = lqe(index, t.local, eff);
  return t;
}

SearchTrace search_trace(const HashIndex& index, const FeatureMap& query_map, const PixelBox& bbox,
                         const HashLayerParams& params, const SearchConfig& cfg) {
  return search_code(index, query_code(query_map, bbox, params), cfg);
}

RankedList search(const HashIndex& index, const FeatureMap& query_map, const PixelBox& bbox,
                  const HashLayerParams& params, const SearchConfig& cfg) {
  return search_trace(index, query_map, bbox, params, cfg).final_list();
}

}  // namespace drh
