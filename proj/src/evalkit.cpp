#include "drh/evalkit.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "drh/error.hpp"

namespace drh {

namespace {

std::set<std::string> read_list(const std::filesystem::path& path) {
  std::set<std::string> out;
  std::ifstream is(path);
  if (!is) return out;
  std::string tok;
  while (is >> tok) out.insert(tok);
  return out;
}

}  // namespace

double average_precision(std::span<const std::string> ranked, const QueryGroundTruth& gt,
                         ApMethod method) {
  if (gt.positives.empty())
    throw Error(ErrorCode::EmptyPositives, "query " + gt.query_id + " has no positives");
  const double npos = static_cast<double>(gt.positives.size());

  double ap = 0.0;
  double old_recall = 0.0;
  double old_precision = 1.0;
  std::size_t hits = 0;
  std::size_t rank = 0;  // rank among non-junk entries
  for (const auto& id : ranked) {
    if (gt.junk.contains(id)) continue;
    const bool positive = gt.positives.contains(id);
    if (positive) ++hits;
    ++rank;
    const double precision = static_cast<double>(hits) / static_cast<double>(rank);
    if (method == ApMethod::Trapezoidal) {
      const double recall = static_cast<double>(hits) / npos;
      ap += (recall - old_recall) * (old_precision + precision) / 2.0;
      old_recall = recall;
      old_precision = precision;
    } else if (positive) {
      ap += precision / npos;
    }
  }
  return ap;
}

double mean_average_precision(const std::map<std::string, std::vector<std::string>>& results,
                              std::span<const QueryGroundTruth> gts, ApMethod method) {
  if (gts.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& gt : gts) {
    const auto it = results.find(gt.query_id);
    if (it == results.end()) throw Error(ErrorCode::MissingQueryResult, gt.query_id);
    sum += average_precision(it->second, gt, method);
  }
  return sum / static_cast<double>(gts.size());
}

QueryGroundTruth parse_query_line(const std::string& query_id, const std::string& line) {
  std::istringstream ss(line);
  std::string stem;
  double x1, y1, x2, y2;
  if (!(ss >> stem >> x1 >> y1 >> x2 >> y2))
    throw Error(ErrorCode::MalformedQueryFile, query_id + ": expected '<image> x1 y1 x2 y2'");
  std::string extra;
  if (ss >> extra) throw Error(ErrorCode::MalformedQueryFile, query_id + ": trailing fields");
  if (!(x2 > x1 && y2 > y1 && x1 >= 0 && y1 >= 0))
    throw Error(ErrorCode::MalformedQueryFile, query_id + ": degenerate bounding box");

  constexpr std::string_view kPrefix = "oxc1_";
  if (stem.starts_with(kPrefix)) stem.erase(0, kPrefix.size());

  QueryGroundTruth gt;
  gt.query_id = query_id;
  gt.query_image_id = stem;
  gt.bbox = {x1, y1, x2 - x1, y2 - y1};
  return gt;
}

std::vector<QueryGroundTruth> parse_ground_truth(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw Error(ErrorCode::IoFailure, dir.string() + " is not a directory");

  constexpr std::string_view kSuffix = "_query.txt";
  std::vector<QueryGroundTruth> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_regular_file() || !name.ends_with(kSuffix)) continue;
    const auto qid = name.substr(0, name.size() - kSuffix.size());

    std::ifstream is(entry.path());
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::MalformedQueryFile, qid + ": empty query file");
    auto gt = parse_query_line(qid, line);

    gt.positives = read_list(dir / (qid + "_good.txt"));
    for (auto& id : read_list(dir / (qid + "_ok.txt"))) gt.positives.insert(id);
    gt.junk = read_list(dir / (qid + "_junk.txt"));
    for (const auto& id : gt.junk)
      if (gt.positives.contains(id))
        throw Error(ErrorCode::MalformedQueryFile, qid + ": " + id + " is both positive and junk");
    out.push_back(std::move(gt));
  }
  std::sort(out.begin(), out.end(),
            [](const QueryGroundTruth& a, const QueryGroundTruth& b) { return a.query_id < b.query_id; });
  return out;
}

}  // namespace drh
