#include "jetflight/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "jetflight/errors.hpp"

namespace jetflight {

std::string git_blob_hash(std::string_view bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw Error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_blob_hash(const std::string& path) { return git_blob_hash(read_file_bytes(path)); }

void RunManifest::seal() {
  std::string canonical;
  for (auto& in : inputs) {
    in.hash = file_blob_hash(in.path);
    canonical += in.hash + '\n';
  }
  canonical += resolved.dump();
  content_hash = git_blob_hash(canonical);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["scenario_path"] = scenario_path;
  j["variant"] = variant;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["inputs"] = nlohmann::json::array();
  for (const auto& in : inputs) j["inputs"].push_back({{"path", in.path}, {"hash", in.hash}});
  j["resolved"] = resolved;
  j["content_hash"] = content_hash;
  return j;
}

}  // namespace jetflight
