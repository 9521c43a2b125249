#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "drh/bench.hpp"
#include "drh/error.hpp"
#include "drh/evalkit.hpp"
#include "drh/feature_map.hpp"
#include "drh/hashnet.hpp"
#include "drh/index.hpp"
#include "drh/pipeline.hpp"
#include "drh/pooling.hpp"
#include "drh/regions.hpp"
#include "drh/synthetic.hpp"
#include "manifest.hpp"

namespace drh::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 42;
  unsigned threads = 1;
  bool verbose = false;
  std::string manifest;
};

class Stopwatch {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

json box_json(const std::optional<RegionBox>& b) {
  if (!b) return nullptr;
  return json::array({b->x0, b->y0, b->w, b->h});
}

json window_json(const SlidingWindowConfig& c) {
  return {{"lambda", c.lambda}, {"aspect_threshold", c.aspect_threshold}, {"include_global", c.include_global}};
}

json search_json(const SearchConfig& c) {
  return {{"m", c.m}, {"q", c.q}, {"use_gqe", c.use_gqe}, {"use_lqe", c.use_lqe}};
}

// image_id -> pixel size, from the extractor's manifest.json. Entries may be
// [w, h], {"width": w, "height": h} or {"w": w, "h": h}.
std::unordered_map<std::string, ImageSize> load_image_sizes(const std::string& path) {
  std::unordered_map<std::string, ImageSize> out;
  if (path.empty()) return out;
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  const auto j = json::parse(is);
  const auto& table = j.contains("images") ? j.at("images") : j;
  for (const auto& [id, v] : table.items()) {
    ImageSize s;
    if (v.is_array()) {
      s = {v.at(0).get<std::uint32_t>(), v.at(1).get<std::uint32_t>()};
    } else if (v.contains("width")) {
      s = {v.at("width").get<std::uint32_t>(), v.at("height").get<std::uint32_t>()};
    } else {
      s = {v.at("w").get<std::uint32_t>(), v.at("h").get<std::uint32_t>()};
    }
    out[id] = s;
  }
  return out;
}

ImageSize size_for(const std::unordered_map<std::string, ImageSize>& sizes, const FeatureMap& fm) {
  const auto it = sizes.find(fm.image_id);
  return it == sizes.end() ? nominal_image_size(fm) : it->second;
}

PixelBox parse_bbox(const std::string& s) {
  PixelBox b;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream ss(s);
  if (!(ss >> b.x >> c1 >> b.y >> c2 >> b.w >> c3 >> b.h) || c1 != ',' || c2 != ',' || c3 != ',')
    throw CLI::ValidationError("--bbox", "expected X,Y,W,H");
  return b;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  os << j.dump(2) << '\n';
}

fs::path manifest_path(const Globals& g, const std::string& primary_output, const std::string& cmd) {
  if (!g.manifest.empty()) return g.manifest;
  if (!primary_output.empty()) return primary_output + ".manifest.json";
  return "drh-" + cmd + ".manifest.json";
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string features, image_sizes, out;
  std::size_t bits = 1024;
  SlidingWindowConfig window;
  TrainConfig train;
  bool global_only = false;
};

int cmd_train(const TrainOpts& o, const Globals& g, RunManifest& man, std::ostream& out,
              std::ostream& err) {
  Stopwatch sw;
  TrainConfig cfg = o.train;
  cfg.seed = g.seed;
  o.window.validate();
  cfg.validate();

  const auto sizes = load_image_sizes(o.image_sizes);
  if (!o.image_sizes.empty()) man.add_input(o.image_sizes);

  std::vector<float> rows;
  std::size_t channels = 0, n = 0;
  for (const auto& path : list_feature_files(o.features)) {
    const auto fm = read_feature_map(path);
    man.add_input(path);
    if (channels == 0) channels = fm.channels;
    if (fm.channels != channels)
      throw Error(ErrorCode::DimensionMismatch, path.string() + " has a different channel count");
    const auto sz = size_for(sizes, fm);
    std::vector<RegionBox> boxes;
    if (o.global_only) {
      boxes.push_back(RegionBox::whole(fm.width, fm.height));
    } else {
      boxes = propose_regions(fm, sz.width, sz.height, o.window);
    }
    for (const auto& b : boxes) {
      rows.resize(rows.size() + channels);
      roi_max_pool_into(fm, b, {rows.data() + n * channels, channels});
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyTrainingSet, "no feature maps in " + o.features);
  man.timings_ms["load"] = sw.lap_ms();
  if (g.verbose) err << "training on " << n << " region descriptors of dim " << channels << '\n';

  const Eigen::Map<const MatrixRf> data(rows.data(), static_cast<Eigen::Index>(n),
                                        static_cast<Eigen::Index>(channels));
  const auto result = train(MatrixRf(data), o.bits, cfg);
  man.timings_ms["train"] = sw.lap_ms();

  save_model(result.params, fs::path(o.out));
  man.add_output(o.out);
  man.config["descriptors"] = n;
  man.config["loss_trace"] = result.epoch_loss;
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    if (g.verbose) err << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << '\n';
  out << "wrote " << o.out << " (" << o.bits << " bits x " << channels << " channels, " << n
      << " descriptors";
  if (result.epoch_loss.empty()) {
    out << ", untrained random projection)\n";
  } else {
    out << ", final loss " << result.epoch_loss.back() << ")\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- index

struct IndexOpts {
  std::string features, model, image_sizes, out;
  SlidingWindowConfig window;
};

int cmd_index(const IndexOpts& o, const Globals& g, RunManifest& man, std::ostream& out,
              std::ostream& err) {
  Stopwatch sw;
  o.window.validate();
  const auto params = load_model(fs::path(o.model));
  man.add_input(o.model);
  const auto sizes = load_image_sizes(o.image_sizes);
  if (!o.image_sizes.empty()) man.add_input(o.image_sizes);

  HashIndex index(params.bits());
  const auto files = list_feature_files(o.features);
  const std::size_t chunk = std::max(1u, g.threads) * 4;
  for (std::size_t start = 0; start < files.size(); start += chunk) {
    std::vector<FeatureMap> maps;
    std::vector<ImageSize> dims;
    for (std::size_t i = start; i < std::min(files.size(), start + chunk); ++i) {
      maps.push_back(read_feature_map(files[i]));
      man.add_input(files[i]);
      dims.push_back(size_for(sizes, maps.back()));
    }
    const auto part = build_index(maps, params, o.window, dims, g.threads);
    for (const auto& r : part.records()) index.add(r);
    if (g.verbose) err << "indexed " << index.size() << "/" << files.size() << '\n';
  }
  man.timings_ms["build"] = sw.lap_ms();
  save_index(index, fs::path(o.out));
  man.add_output(o.out);
  man.timings_ms["save"] = sw.lap_ms();

  std::size_t locals = 0;
  for (const auto& r : index.records()) locals += r.locals.size();
  out << "wrote " << o.out << " (" << index.size() << " images, " << locals << " local regions, "
      << index.bits() << " bits)\n";
  return kOk;
}

// ---------------------------------------------------------------- search

struct SearchOpts {
  std::string index, model, query, bbox, format = "json", out;
  SearchConfig search;
  std::size_t top = 20;
};

json entry_json(const RankedEntry& e) {
  json stages = json::object();
  if (e.stages.global_distance) stages["gdrh"] = *e.stages.global_distance;
  if (e.stages.global_expansion) stages["gqe"] = *e.stages.global_expansion;
  if (e.stages.local_distance) stages["ldrh"] = *e.stages.local_distance;
  if (e.stages.local_expansion) stages["lqe"] = *e.stages.local_expansion;
  return {{"image_id", e.image_id}, {"score", e.score}, {"stage_scores", stages},
          {"best_box", box_json(e.best_box)}};
}

int cmd_search(const SearchOpts& o, const Globals&, RunManifest& man, std::ostream& out, std::ostream&) {
  Stopwatch sw;
  if (o.format != "json" && o.format != "tsv")
    throw CLI::ValidationError("--format", "must be json or tsv");
  const auto index = load_index(fs::path(o.index));
  const auto params = load_model(fs::path(o.model));
  const auto qmap = read_feature_map(fs::path(o.query));
  for (const auto& p : {o.index, o.model, o.query}) man.add_input(p);
  man.timings_ms["load"] = sw.lap_ms();

  PixelBox bbox;
  if (o.bbox.empty()) {
    bbox = {0, 0, static_cast<double>(qmap.width) * qmap.stride, static_cast<double>(qmap.height) * qmap.stride};
  } else {
    bbox = parse_bbox(o.bbox);
  }
  if (params.bits() != index.bits())
    throw Error(ErrorCode::LengthMismatch, "model and index code lengths differ");
  const auto trace = search_trace(index, qmap, bbox, params, o.search);
  man.timings_ms["search"] = sw.lap_ms();

  const auto& list = trace.final_list();
  const auto n = std::min(o.top, list.size());
  std::ostringstream text;
  if (o.format == "json") {
    auto arr = json::array();
    for (std::size_t i = 0; i < n; ++i) arr.push_back(entry_json(list.entries[i]));
    text << arr.dump(2) << '\n';
  } else {
    text << "rank\timage_id\tscore\tbest_box\n";
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = list.entries[i];
      text << i + 1 << '\t' << e.image_id << '\t' << e.score << '\t';
      if (e.best_box) text << e.best_box->x0 << ',' << e.best_box->y0 << ',' << e.best_box->w << ',' << e.best_box->h;
      text << '\n';
    }
  }
  if (o.out.empty()) {
    out << text.str();
  } else {
    std::ofstream os(o.out, std::ios::trunc);
    if (!os) throw Error(ErrorCode::IoFailure, "cannot write " + o.out);
    os << text.str();
    os.close();
    man.add_output(o.out);
  }
  man.config["final_stage"] = std::string(to_string(list.stage));
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  std::string index, model, gt_dir, features, report;
  SearchConfig search;
};

int cmd_eval(const EvalOpts& o, const Globals& g, RunManifest& man, std::ostream& out, std::ostream& err) {
  Stopwatch sw;
  o.search.validate();
  const auto index = load_index(fs::path(o.index));
  const auto params = load_model(fs::path(o.model));
  man.add_input(o.index);
  man.add_input(o.model);
  const auto gts = parse_ground_truth(o.gt_dir);
  if (gts.empty()) throw Error(ErrorCode::MalformedQueryFile, "no *_query.txt files in " + o.gt_dir);

  struct Variant {
    const char* name;
    bool gqe, ldrh, lqe;
  };
  const Variant variants[] = {
      {"gdrh", false, false, false},
      {"gdrh+ldrh", false, true, false},
      {"gdrh+gqe+ldrh", true, true, false},
      {"gdrh+ldrh+lqe", false, true, true},
      {"all", true, true, true},
  };

  std::map<std::string, std::map<std::string, std::vector<std::string>>> results;
  auto per_query = json::array();
  for (const auto& gt : gts) {
    const fs::path qpath = fs::path(o.features) / (gt.query_image_id + ".drhf");
    const auto qmap = read_feature_map(qpath);
    man.add_input(qpath);
    const auto code = query_code(qmap, gt.bbox, params);
    json row = {{"query_id", gt.query_id}, {"image_id", gt.query_image_id}};
    for (const auto& v : variants) {
      SearchConfig cfg = o.search;
      cfg.use_gqe = v.gqe;
      cfg.use_lqe = v.lqe;
      const auto trace = search_code(index, code, cfg);
      const auto& list = v.ldrh ? trace.final_list() : trace.global;
      auto ids = list.image_ids();
      row["ap"][v.name] = average_precision(ids, gt);
      results[v.name][gt.query_id] = std::move(ids);
    }
    per_query.push_back(std::move(row));
    if (g.verbose) err << gt.query_id << " ap(all)=" << per_query.back()["ap"]["all"] << '\n';
  }
  man.timings_ms["eval"] = sw.lap_ms();

  json maps = json::object();
  for (const auto& v : variants) maps[v.name] = mean_average_precision(results[v.name], gts);
  const json report = {{"queries", per_query}, {"map", maps}, {"config", search_json(o.search)}};
  if (!o.report.empty()) {
    write_json_file(o.report, report);
    man.add_output(o.report);
  }
  for (const auto& v : variants)
    out << std::left << std::setw(16) << v.name << " mAP " << std::fixed << std::setprecision(4)
        << maps[v.name].get<double>() << '\n';
  return kOk;
}

// ---------------------------------------------------------------- bench

const char* kernel_name(detail::ScanKernel k) {
  switch (k) {
    case detail::ScanKernel::Avx512: return "avx512-vpopcntdq";
    case detail::ScanKernel::Popcnt: return "popcnt";
    default: return "generic";
  }
}

struct BenchOpts {
  std::string index, report;
  std::size_t synthetic = 0;
  std::size_t bits = 1024;
  BenchConfig bench;
};

int cmd_bench(const BenchOpts& o, const Globals& g, RunManifest& man, std::ostream& out, std::ostream&) {
  HashIndex index;
  if (!o.index.empty()) {
    index = load_index(fs::path(o.index));
    man.add_input(o.index);
  } else {
    index = random_index(o.synthetic, o.bits, g.seed);
  }
  BenchConfig cfg = o.bench;
  cfg.seed = g.seed;
  const auto rep = run_bench(index, cfg);

  auto stats = [](const TimingStats& s) {
    return json{{"mean_ms", s.mean_ms}, {"median_ms", s.median_ms}, {"min_ms", s.min_ms}, {"max_ms", s.max_ms}};
  };
  const json j = {{"records", rep.records}, {"bits", rep.bits}, {"float_dim", rep.float_dim},
                  {"trials", rep.trials}, {"hash_scan", stats(rep.hash_scan)},
                  {"float_scan", stats(rep.float_scan)}, {"speedup", rep.speedup()},
                  {"kernel", kernel_name(detail::scan_kernel())}};
  if (!o.report.empty()) write_json_file(o.report, j);
  man.timings_ms["hash_scan_mean"] = rep.hash_scan.mean_ms;
  man.timings_ms["float_scan_mean"] = rep.float_scan.mean_ms;

  if (rep.records == 0) {
    out << "index is empty: 0-record scan, nothing timed\n";
    return kOk;
  }
  out << std::fixed << std::setprecision(3) << "records " << rep.records << ", trials " << rep.trials
      << "\nhash scan  (" << rep.bits << "-bit): mean " << rep.hash_scan.mean_ms << " ms, median "
      << rep.hash_scan.median_ms << " ms [" << kernel_name(detail::scan_kernel()) << "]\nfloat scan (" << rep.float_dim << "-d f32): mean "
      << rep.float_scan.mean_ms << " ms, median " << rep.float_scan.median_ms << " ms\nspeedup "
      << std::setprecision(1) << rep.speedup() << "x\n";
  return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string out;
  std::size_t images = 50;
  std::uint32_t width = 24, height = 18, channels = 64, stride = 16;
  std::size_t plant = 0;
  std::uint32_t patch = 4;
};

int cmd_synth(const SynthOpts& o, const Globals& g, RunManifest& man, std::ostream& out, std::ostream&) {
  if (o.plant > o.images) throw CLI::ValidationError("--plant", "cannot exceed --images");
  if (o.patch == 0 || o.patch > o.width || o.patch > o.height)
    throw CLI::ValidationError("--patch", "patch must fit inside the map");
  fs::create_directories(o.out);
  std::mt19937_64 rng(g.seed);
  const auto patch = synthetic::random_patch(o.patch, o.patch, o.channels, rng);
  std::uniform_int_distribution<std::uint32_t> px(0, o.width - o.patch), py(0, o.height - o.patch);

  json sizes = json::object();
  std::vector<std::string> planted;
  std::vector<bool> gets_patch(o.images, false);
  {
    std::vector<std::size_t> order(o.images);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < o.plant; ++k) gets_patch[order[k]] = true;
  }
  std::optional<std::pair<FeatureMap, RegionBox>> query;
  for (std::size_t i = 0; i < o.images; ++i) {
    std::ostringstream id;
    id << "img" << std::setw(5) << std::setfill('0') << i;
    auto fm = synthetic::random_map(id.str(), o.width, o.height, o.channels, o.stride, rng);
    if (gets_patch[i]) {
      const RegionBox at{px(rng), py(rng), o.patch, o.patch};
      synthetic::plant(fm, patch, at.x0, at.y0);
      planted.push_back(fm.image_id);
      if (!query) query.emplace(fm, at);
    }
    const auto path = fs::path(o.out) / (fm.image_id + ".drhf");
    write_feature_map(fm, path);
    man.add_output(path);
    sizes[fm.image_id] = json::array({o.width * o.stride, o.height * o.stride});
  }
  write_json_file(fs::path(o.out) / "sizes.json", sizes);
  man.add_output(fs::path(o.out) / "sizes.json");

  if (query) {
    const auto gt_dir = fs::path(o.out) / "gt";
    fs::create_directories(gt_dir);
    const auto pb = synthetic::pixel_box(query->second, o.stride);
    std::ofstream(gt_dir / "planted_query.txt")
        << query->first.image_id << ' ' << pb.x << ' ' << pb.y << ' ' << pb.x + pb.w << ' ' << pb.y + pb.h << '\n';
    std::ofstream good(gt_dir / "planted_good.txt");
    for (const auto& id : planted) good << id << '\n';
  }
  out << "wrote " << o.images << " feature maps to " << o.out;
  if (!planted.empty()) out << " (" << planted.size() << " with a planted patch)";
  out << '\n';
  return kOk;
}

// ---------------------------------------------------------------- dispatch

int report_error(const std::exception& e, int code, std::ostream& err) {
  err << "drh: " << e.what() << '\n';
  return code;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth);

int cmd_replay(const std::string& manifest_file, const std::string& manifest_out, std::ostream& out,
               std::ostream& err, int depth) {
  if (depth > 0) throw CLI::ValidationError("replay", "a replay cannot replay another manifest");
  const auto man = RunManifest::load(manifest_file);
  for (const auto& in : man.inputs) {
    if (file_digest(in.path) != in.sha256)
      throw Error(ErrorCode::DimensionMismatch, "input " + in.path + " changed since the recorded run");
  }
  auto args = man.args;
  args.push_back("--manifest");
  args.push_back(manifest_out.empty() ? manifest_file + ".replay.json" : manifest_out);
  const int rc = dispatch(args, out, err, depth + 1);
  if (rc != kOk) return rc;

  bool same = true;
  for (const auto& o : man.outputs) {
    if (!fs::exists(o.path) || file_digest(o.path) != o.sha256) {
      err << "drh: replay output differs: " << o.path << '\n';
      same = false;
    }
  }
  out << (same ? "replay reproduced all recorded outputs\n" : "replay outputs differ\n");
  return same ? kOk : kDataError;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Region hashing instance search"};
  app.name("drh");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread cap")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", g.verbose, "Progress on stderr");
  app.add_option("--manifest", g.manifest, "Where to write the run manifest");

  auto add_window = [](CLI::App* sub, SlidingWindowConfig& w) {
    sub->add_option("--lambda", w.lambda, "Sliding-window overlap")->capture_default_str();
    sub->add_option("--aspect-threshold", w.aspect_threshold, "Narrow-scale filter threshold")->capture_default_str();
  };
  auto add_search = [](CLI::App* sub, SearchConfig& s) {
    sub->add_option("--m", s.m, "Candidates kept by the global scan")->capture_default_str();
    sub->add_option("--q", s.q, "Query expansion depth")->capture_default_str();
  };

  TrainOpts train_o;
  bool train_no_global = false;
  auto* train_cmd = app.add_subcommand("train", "Learn the region hashing layer");
  train_cmd->add_option("--features", train_o.features, "Directory of .drhf maps")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--image-sizes", train_o.image_sizes, "JSON image_id -> pixel size")->check(CLI::ExistingFile);
  train_cmd->add_option("--bits", train_o.bits, "Code length")->capture_default_str()->check(CLI::PositiveNumber);
  add_window(train_cmd, train_o.window);
  train_cmd->add_flag("--no-global", train_no_global, "Leave global regions out of the training set");
  train_cmd->add_flag("--global-only", train_o.global_only, "Train on global regions only");
  train_cmd->add_option("--alpha", train_o.train.alpha)->capture_default_str();
  train_cmd->add_option("--beta", train_o.train.beta)->capture_default_str();
  train_cmd->add_option("--eta", train_o.train.eta)->capture_default_str();
  train_cmd->add_option("--lr", train_o.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--momentum", train_o.train.momentum)->capture_default_str();
  train_cmd->add_option("--epochs", train_o.train.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", train_o.train.batch_size)->capture_default_str();
  train_cmd->add_option("--init-stddev", train_o.train.init_stddev)->capture_default_str();
  train_cmd->add_option("--out", train_o.out, "Model file (.drhm)")->required();

  IndexOpts index_o;
  bool index_no_global = false;
  auto* index_cmd = app.add_subcommand("index", "Hash every region of every feature map");
  index_cmd->add_option("--features", index_o.features)->required()->check(CLI::ExistingDirectory);
  index_cmd->add_option("--model", index_o.model)->required()->check(CLI::ExistingFile);
  index_cmd->add_option("--image-sizes", index_o.image_sizes)->check(CLI::ExistingFile);
  add_window(index_cmd, index_o.window);
  index_cmd->add_flag("--no-global", index_no_global, "Rejected: the index always stores global codes");
  index_cmd->add_option("--out", index_o.out, "Index file (.drhi)")->required();

  SearchOpts search_o;
  bool no_gqe = false, no_lqe = false;
  auto* search_cmd = app.add_subcommand("search", "Query the index with an image patch");
  search_cmd->add_option("--index", search_o.index)->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--model", search_o.model)->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--query", search_o.query, "Query feature map (.drhf)")->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--bbox", search_o.bbox, "X,Y,W,H in query image pixels (default: whole image)");
  add_search(search_cmd, search_o.search);
  search_cmd->add_flag("--no-gqe", no_gqe);
  search_cmd->add_flag("--no-lqe", no_lqe);
  search_cmd->add_option("--top", search_o.top)->capture_default_str();
  search_cmd->add_option("--format", search_o.format)->capture_default_str()->check(CLI::IsMember({"json", "tsv"}));
  search_cmd->add_option("--out", search_o.out, "Write results here instead of stdout");

  EvalOpts eval_o;
  auto* eval_cmd = app.add_subcommand("eval", "mAP over Oxford-style ground truth");
  eval_cmd->add_option("--index", eval_o.index)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--model", eval_o.model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--gt-dir", eval_o.gt_dir)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--features", eval_o.features, "Directory holding the query images' maps")->required()->check(CLI::ExistingDirectory);
  add_search(eval_cmd, eval_o.search);
  eval_cmd->add_option("--report", eval_o.report, "JSON report path");

  BenchOpts bench_o;
  auto* bench_cmd = app.add_subcommand("bench", "Time hash scan against a float scan");
  auto* bench_index = bench_cmd->add_option("--index", bench_o.index)->check(CLI::ExistingFile);
  bench_cmd->add_option("--synthetic", bench_o.synthetic, "Random index of this many records")->excludes(bench_index);
  bench_cmd->add_option("--bits", bench_o.bits, "Code length of the synthetic index")->capture_default_str();
  bench_cmd->add_option("--trials", bench_o.bench.trials)->capture_default_str();
  bench_cmd->add_option("--dim", bench_o.bench.float_dim, "Float baseline dimension")->capture_default_str();
  bench_cmd->add_option("--m", bench_o.bench.m)->capture_default_str();
  bench_cmd->add_option("--report", bench_o.report, "JSON report path");

  SynthOpts synth_o;
  auto* synth_cmd = app.add_subcommand("synth", "Write random feature maps, optionally with a planted patch");
  synth_cmd->add_option("--out", synth_o.out)->required();
  synth_cmd->add_option("--images", synth_o.images)->capture_default_str();
  synth_cmd->add_option("--width", synth_o.width)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth_o.height)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--channels", synth_o.channels)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--stride", synth_o.stride)->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--plant", synth_o.plant, "Images that receive the query patch")->capture_default_str();
  synth_cmd->add_option("--patch", synth_o.patch, "Patch side in cells")->capture_default_str();

  std::string replay_file;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded manifest and compare outputs");
  replay_cmd->add_option("manifest", replay_file)->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  // Arguments as given, minus --manifest, so a replay can choose its own.
  RunManifest man;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest") { ++i; continue; }
    if (args[i].starts_with("--manifest=")) continue;
    man.args.push_back(args[i]);
  }
  man.config["seed"] = g.seed;
  man.config["threads"] = g.threads;

  try {
    int rc = kOk;
    std::string primary;
    Stopwatch total;
    if (*train_cmd) {
      if (train_no_global && train_o.global_only)
        throw CLI::ValidationError("--no-global", "cannot be combined with --global-only");
      train_o.window.include_global = !train_no_global;
      man.command = "train";
      man.config["bits"] = train_o.bits;
      man.config["window"] = window_json(train_o.window);
      man.config["global_only"] = train_o.global_only;
      man.config["train"] = {{"alpha", train_o.train.alpha}, {"beta", train_o.train.beta},
                             {"eta", train_o.train.eta}, {"lr", train_o.train.learning_rate},
                             {"momentum", train_o.train.momentum}, {"epochs", train_o.train.epochs},
                             {"batch_size", train_o.train.batch_size}, {"init_stddev", train_o.train.init_stddev}};
      primary = train_o.out;
      rc = cmd_train(train_o, g, man, out, err);
    } else if (*index_cmd) {
      if (index_no_global)
        throw CLI::ValidationError("--no-global", "the index needs global codes for the first search stage");
      man.command = "index";
      man.config["window"] = window_json(index_o.window);
      primary = index_o.out;
      rc = cmd_index(index_o, g, man, out, err);
    } else if (*search_cmd) {
      search_o.search.use_gqe = !no_gqe;
      search_o.search.use_lqe = !no_lqe;
      search_o.search.validate();
      man.command = "search";
      man.config["search"] = search_json(search_o.search);
      man.config["top"] = search_o.top;
      man.config["format"] = search_o.format;
      primary = search_o.out;
      rc = cmd_search(search_o, g, man, out, err);
    } else if (*eval_cmd) {
      man.command = "eval";
      man.config["search"] = search_json(eval_o.search);
      primary = eval_o.report;
      rc = cmd_eval(eval_o, g, man, out, err);
    } else if (*bench_cmd) {
      if (bench_o.index.empty() && bench_o.synthetic == 0 && bench_cmd->count("--synthetic") == 0)
        throw CLI::ValidationError("bench", "give --index or --synthetic");
      man.command = "bench";
      man.config["trials"] = bench_o.bench.trials;
      man.config["float_dim"] = bench_o.bench.float_dim;
      man.config["m"] = bench_o.bench.m;
      man.config["synthetic"] = bench_o.synthetic;
      man.config["bits"] = bench_o.bits;
      primary = bench_o.report;
      rc = cmd_bench(bench_o, g, man, out, err);
    } else if (*synth_cmd) {
      man.command = "synth";
      man.config["synth"] = {{"images", synth_o.images}, {"width", synth_o.width}, {"height", synth_o.height},
                             {"channels", synth_o.channels}, {"stride", synth_o.stride},
                             {"plant", synth_o.plant}, {"patch", synth_o.patch}};
      primary = (fs::path(synth_o.out) / "synth").string();
      rc = cmd_synth(synth_o, g, man, out, err);
    } else if (*replay_cmd) {
      return cmd_replay(replay_file, g.manifest, out, err, depth);
    }
    man.timings_ms["total"] = total.lap_ms();
    man.save(manifest_path(g, primary, man.command));
    return rc;
  } catch (const CLI::ParseError& e) {
    return report_error(e, kUsage, err);
  } catch (const Error& e) {
    return report_error(e, e.code() == ErrorCode::DivergenceDetected ? kNumericFailure : kDataError, err);
  } catch (const json::exception& e) {
    return report_error(e, kDataError, err);
  } catch (const fs::filesystem_error& e) {
    return report_error(e, kDataError, err);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return dispatch(args, out, err, 0);
}

}  // namespace drh::cli
