#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace drh::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

struct FileDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Everything needed to re-run a subcommand: its arguments, the resolved
/// configuration, and digests of what it read and wrote.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // argv after the program name, minus --manifest
  nlohmann::json config = nlohmann::json::object();
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::map<std::string, double> timings_ms;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);

  [[nodiscard]] nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  void save(const std::filesystem::path& path) const;
  static RunManifest load(const std::filesystem::path& path);
};

}  // namespace drh::cli
