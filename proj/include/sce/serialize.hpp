#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sce/features.hpp"
#include "sce/generate.hpp"
#include "sce/nn.hpp"

namespace sce {

static_assert(std::endian::native == std::endian::little,
              "parameter snapshots assume a little-endian host");

// Plain nlohmann::json keeps keys sorted, which pins manifest bytes.
using json = nlohmann::json;

inline json to_json(const TestSpec& s) {
  json j;
  j["predictive"] = to_string(s.predictive);
  json d = json::array();
  for (int i = 0; i < kNumFeatures; ++i) {
    if (s.distractor[static_cast<size_t>(i)]) d.push_back(to_string(static_cast<Feature>(i)));
  }
  j["distractors"] = d;
  j["K"] = s.K;
  j["n"] = s.n;
  j["seed"] = s.seed;
  return j;
}

inline json to_json(const Rule& r) {
  json j;
  if (r.kind == Rule::Kind::monotonic_step) {
    j["kind"] = "monotonic";
    j["feature"] = to_string(r.feature);
    j["direction"] = r.direction;
  } else {
    j["kind"] = "alternating";
    j["feature"] = to_string(r.feature);
    j["shape_a"] = to_string(r.shape_a);
    j["shape_b"] = to_string(r.shape_b);
  }
  return j;
}

inline json to_json(const FeatureVector& f) {
  json j;
  j["number"] = f.number;
  j["shade"] = f.shade_idx;
  j["shape"] = to_string(f.shape);
  j["size"] = f.size_idx;
  j["positions"] = f.positions;
  return j;
}

// Per-test manifest: everything needed to audit a generated test against its
// image files.
inline json test_manifest(const SCETest& t, int test_id, const std::vector<std::string>& seq_files,
                          const std::vector<std::string>& choice_files) {
  json j;
  j["test_id"] = test_id;
  j["spec"] = to_json(t.spec);
  j["rule"] = to_json(t.rule);
  json seq = json::array();
  for (const auto& f : t.sequence_features) seq.push_back(to_json(f));
  j["sequence_features"] = seq;
  json ch = json::array();
  for (const auto& f : t.choice_features) ch.push_back(to_json(f));
  j["choice_features"] = ch;
  j["correct_idx"] = t.correct_idx;
  j["sequence_images"] = seq_files;
  j["choice_images"] = choice_files;
  return j;
}

// Snapshot layout: "SCEP1\n", 8-byte LE header length, JSON header (layer
// names, shapes, variant, seed), then all tensors as one flat little-endian
// float32 array in store order.
inline void save_params(const std::string& path, const ModelBundle<float>& m) {
  json hdr;
  hdr["variant"] = m.cfg.id;
  hdr["latent_dim"] = m.cfg.latent_dim;
  hdr["seed"] = m.seed;
  hdr["dtype"] = "float32";
  json tensors = json::array();
  std::uint64_t total = 0;
  for (const auto& t : m.params.tensors) {
    json tj;
    tj["name"] = t.name;
    tj["shape"] = t.shape;
    tensors.push_back(tj);
    total += t.data.size();
  }
  hdr["tensors"] = tensors;
  hdr["total_scalars"] = total;

  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  const std::string head = hdr.dump(2);
  const std::uint64_t len = head.size();
  f.write("SCEP1\n", 6);
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& t : m.params.tensors) {
    f.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) fail(Errc::io_error, "write failed for '" + path + "'");
}

// Rebuilds the bundle from the header's variant id and seed, then overwrites
// parameter values from the blob. Optimizer state is not serialized (snapshots
// capture weights, as a fresh-step protocol needs nothing else).
inline ModelBundle<float> load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::io_error, "cannot open '" + path + "'");
  char magic[6];
  f.read(magic, 6);
  if (!f || std::memcmp(magic, "SCEP1\n", 6) != 0)
    fail(Errc::io_error, path + ": not a parameter snapshot");
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  std::string head(len, '\0');
  f.read(head.data(), static_cast<std::streamsize>(len));
  if (!f) fail(Errc::io_error, path + ": truncated header");
  json hdr = json::parse(head);

  ModelBundle<float> m =
      ModelBundle<float>::init(find_variant(hdr.at("variant").get<std::string>()),
                               hdr.at("seed").get<std::uint64_t>());
  const auto& tensors = hdr.at("tensors");
  if (tensors.size() != m.params.count()) fail(Errc::io_error, path + ": tensor count mismatch");
  for (size_t i = 0; i < m.params.count(); ++i) {
    auto& t = m.params.tensors[i];
    if (tensors[i].at("name").get<std::string>() != t.name ||
        tensors[i].at("shape").get<std::vector<int>>() != t.shape)
      fail(Errc::io_error, path + ": tensor layout mismatch at '" + t.name + "'");
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!f) fail(Errc::io_error, path + ": truncated blob");
  return m;
}

}  // namespace sce
