#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace defectlab {

std::string sha256_hex(const std::string& data);
/// Throws ConfigError when the file cannot be read.
std::string sha256_file(const std::string& path);

struct FileDigest {
  std::string name;  // as given on the command line or relative to the output directory
  std::string sha256;
};

/// Run record written next to stage outputs. Holds no timestamps or
/// absolute paths, so identical runs produce identical manifests.
struct RunManifest {
  std::string tool_version;
  std::string stage;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::vector<std::string> skips;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

void write_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

/// Digest entries for files inside `dir`, named relative to it.
std::vector<FileDigest> digest_outputs(const std::string& dir, const std::vector<std::string>& names);

/// True when `dir/manifest_name` records the same stage, config hash, seed and
/// inputs and every listed output still has its recorded digest.
bool manifest_is_current(const std::string& dir, const std::string& manifest_name,
                         const RunManifest& expected);

std::string tool_version();

}  // namespace defectlab
