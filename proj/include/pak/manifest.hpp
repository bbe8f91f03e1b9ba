#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

namespace pak {

/// Snapshot of everything needed to reproduce a run: configs, the prior
/// (inline), input/artifact paths with content hashes, and the seed.
/// Scoring cross-checks its flags against the training manifest.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  int window = 16;
  int stride = 2;
  std::string fuse_mode = "divide";
  bool motion_embed = true;
  nlohmann::json net_config;    // TransformerConfig::to_json()
  nlohmann::json train_config;  // TrainConfig::to_json(), null for non-train runs
  nlohmann::json prior;         // MotionPrior::to_json(), null before fitting
  std::string prior_path;
  std::string data_path;
  std::string data_hash;
  std::string checkpoint_path;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

/// FNV-1a 64-bit hash of a file's bytes, as a hex string.
std::string file_hash_hex(const std::string& path);

}  // namespace pak
