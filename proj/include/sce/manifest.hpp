#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sce/errors.hpp"

namespace sce {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit content digest; cheap, stable, good enough for
// "did this run produce the same bytes" bookkeeping.
inline std::uint64_t fnv1a64(const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  static const char* hexd = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = hexd[h & 0xf];
    h >>= 4;
  }
  return s;
}

inline std::string digest_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "' for digest");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return digest_hex(fnv1a64(bytes.data(), bytes.size()));
}

// One run's bookkeeping: command, resolved config, seed, and a digest per
// output file. Digests cover file contents only, never timestamps, so a
// repeated run can be compared by diffing the "outputs" object.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;  // resolved key=value pairs
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::pair<std::string, std::string>> outputs;  // path -> digest

  void add_output(const std::string& path) { outputs.push_back({path, digest_file(path)}); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["command"] = command;
    nlohmann::json cfg;
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = cfg;
    j["seed"] = seed;
    j["started"] = started;
    j["finished"] = finished;
    j["tool_version"] = kToolVersion;
    nlohmann::json outs;
    for (const auto& [path, dig] : outputs) outs[path] = dig;
    j["outputs"] = outs;
    return j;
  }
};

}  // namespace sce
