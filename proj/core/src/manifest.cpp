#include "defectlab/manifest.hpp"

#include "defectlab/errors.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#ifndef DEFECTLAB_VERSION
#define DEFECTLAB_VERSION "0.0.0"
#endif

namespace defectlab {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("cannot initialise SHA-256");
  }
  void update(const char* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(digits[md[i] >> 4]);
      out.push_back(digits[md[i] & 15]);
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["stage"] = stage;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  auto digests = [](const std::vector<FileDigest>& v) {
    auto a = nlohmann::ordered_json::array();
    for (const auto& d : v) a.push_back({{"name", d.name}, {"sha256", d.sha256}});
    return a;
  };
  j["inputs"] = digests(inputs);
  j["outputs"] = digests(outputs);
  j["skips"] = skips;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& d : j.at("inputs")) m.inputs.push_back({d.at("name"), d.at("sha256")});
    for (const auto& d : j.at("outputs")) m.outputs.push_back({d.at("name"), d.at("sha256")});
    m.skips = j.at("skips").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << manifest.to_json();
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return RunManifest::from_json(ss.str());
}

std::vector<FileDigest> digest_outputs(const std::string& dir, const std::vector<std::string>& names) {
  std::vector<FileDigest> out;
  for (const auto& n : names) out.push_back({n, sha256_file((std::filesystem::path(dir) / n).string())});
  return out;
}

bool manifest_is_current(const std::string& dir, const std::string& manifest_name,
                         const RunManifest& expected) {
  namespace fs = std::filesystem;
  const auto path = fs::path(dir) / manifest_name;
  if (!fs::exists(path)) return false;
  RunManifest old;
  try {
    old = read_manifest(path.string());
  } catch (const ConfigError&) {
    return false;
  }
  auto same = [](const std::vector<FileDigest>& a, const std::vector<FileDigest>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].name != b[i].name || a[i].sha256 != b[i].sha256) return false;
    return true;
  };
  if (old.stage != expected.stage || old.config_hash != expected.config_hash ||
      old.seed != expected.seed || old.tool_version != expected.tool_version ||
      !same(old.inputs, expected.inputs))
    return false;
  for (const auto& o : old.outputs) {
    const auto p = fs::path(dir) / o.name;
    if (!fs::exists(p) || sha256_file(p.string()) != o.sha256) return false;
  }
  return true;
}

std::string tool_version() { return DEFECTLAB_VERSION; }

}  // namespace defectlab
