#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "drh/error.hpp"

namespace drh::cli {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for hashing");

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoFailure, "sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);

  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {
FileDigest digest_of(const std::filesystem::path& p) {
  return {p.string(), file_digest(p), std::filesystem::file_size(p)};
}

nlohmann::json files_json(const std::vector<FileDigest>& files) {
  auto arr = nlohmann::json::array();
  for (const auto& f : files) arr.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  return arr;
}

std::vector<FileDigest> files_from(const nlohmann::json& arr) {
  std::vector<FileDigest> out;
  for (const auto& f : arr)
    out.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                   f.at("bytes").get<std::uintmax_t>()});
  return out;
}
}  // namespace

void RunManifest::add_input(const std::filesystem::path& p) { inputs.push_back(digest_of(p)); }
void RunManifest::add_output(const std::filesystem::path& p) { outputs.push_back(digest_of(p)); }

nlohmann::json RunManifest::to_json() const {
  return {{"tool", "drh"},
          {"version", kToolVersion},
          {"command", command},
          {"args", args},
          {"config", config},
          {"inputs", files_json(inputs)},
          {"outputs", files_json(outputs)},
          {"timings_ms", timings_ms}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.at("args").get<std::vector<std::string>>();
  m.config = j.value("config", nlohmann::json::object());
  m.inputs = files_from(j.value("inputs", nlohmann::json::array()));
  m.outputs = files_from(j.value("outputs", nlohmann::json::array()));
  m.timings_ms = j.value("timings_ms", std::map<std::string, double>{});
  return m;
}

void RunManifest::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoFailure, "cannot write manifest " + path.string());
  os << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoFailure, "cannot open manifest " + path.string());
  try {
    return from_json(nlohmann::json::parse(is));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedHeader, "bad manifest " + path.string() + ": " + e.what());
  }
}

}  // namespace drh::cli
