#include "pak/manifest.hpp"

#include "pak/errors.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace pak {

using nlohmann::json;

json RunManifest::to_json() const {
  return {{"command", command},
          {"seed", seed},
          {"window", window},
          {"stride", stride},
          {"fuse_mode", fuse_mode},
          {"motion_embed", motion_embed},
          {"net_config", net_config},
          {"train_config", train_config},
          {"prior", prior},
          {"prior_path", prior_path},
          {"data_path", data_path},
          {"data_hash", data_hash},
          {"checkpoint_path", checkpoint_path}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.window = j.at("window").get<int>();
  m.stride = j.at("stride").get<int>();
  m.fuse_mode = j.at("fuse_mode").get<std::string>();
  m.motion_embed = j.at("motion_embed").get<bool>();
  m.net_config = j.at("net_config");
  m.train_config = j.at("train_config");
  m.prior = j.at("prior");
  m.prior_path = j.at("prior_path").get<std::string>();
  m.data_path = j.at("data_path").get<std::string>();
  m.data_hash = j.at("data_hash").get<std::string>();
  m.checkpoint_path = j.at("checkpoint_path").get<std::string>();
  return m;
}

void RunManifest::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open manifest for writing: " + path);
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad manifest " + path + ": " + e.what());
  }
  return from_json(j);
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

}  // namespace pak
