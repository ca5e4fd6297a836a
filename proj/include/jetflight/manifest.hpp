#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace jetflight {

/// SHA-1 of "blob <size>\0" + bytes, as printed by `git hash-object`.
std::string git_blob_hash(std::string_view bytes);

/// Throws IoError if the file cannot be read.
std::string file_blob_hash(const std::string& path);
std::string read_file_bytes(const std::string& path);

struct ManifestInput {
  std::string path;
  std::string hash;
};

struct RunManifest {
  std::string scenario_path;
  std::string variant;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::vector<ManifestInput> inputs;
  nlohmann::json resolved;  ///< every effective setting of the run
  std::string content_hash;  ///< covers input bytes and `resolved`

  /// Fills `inputs` hashes and `content_hash`.
  void seal();
  nlohmann::json to_json() const;
};

}  // namespace jetflight
