#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "drh/regions.hpp"

namespace drh {

struct QueryGroundTruth {
  std::string query_id;        // e.g. "all_souls_1"
  std::string query_image_id;  // e.g. "all_souls_000013"
  PixelBox bbox;
  std::set<std::string> positives;  // good + ok
  std::set<std::string> junk;
};

enum class ApMethod {
  Trapezoidal,     // the Oxford buildings compute_ap scoring
  NonInterpolated, // mean of precision at each positive's rank
};

/// Junk images are dropped from `ranked` before scoring. Positives that never
/// appear count as unretrieved. Throws EmptyPositives.
double average_precision(std::span<const std::string> ranked, const QueryGroundTruth& gt,
                         ApMethod method = ApMethod::Trapezoidal);

/// Arithmetic mean of per-query AP over `gts`. Throws MissingQueryResult when
/// a query has no entry in `results`.
double mean_average_precision(const std::map<std::string, std::vector<std::string>>& results,
                              std::span<const QueryGroundTruth> gts,
                              ApMethod method = ApMethod::Trapezoidal);

/// Reads `<name>_query.txt` and its `_good`, `_ok`, `_junk` lists. A missing
/// list file is an empty set. Queries are sorted by name.
std::vector<QueryGroundTruth> parse_ground_truth(const std::filesystem::path& dir);

/// Parses one query line "[oxc1_]<stem> x1 y1 x2 y2" into a ground truth
/// shell (no positives or junk).
QueryGroundTruth parse_query_line(const std::string& query_id, const std::string& line);

}  // namespace drh
