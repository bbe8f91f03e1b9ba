#include "pak/checkpoint.hpp"

#include "pak/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <fstream>

namespace pak {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'P', 'A', 'K', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::string& path, const TransformerParams& params,
                     const TransformerConfig& config) {
  auto& mutable_params = const_cast<TransformerParams&>(params);
  std::vector<NamedTensor> tensors = named_tensors(mutable_params);

  json dir = json::array();
  std::uint64_t offset = 0;
  for (const NamedTensor& t : tensors) {
    dir.push_back({{"name", t.name},
                   {"rows", t.data.rows()},
                   {"cols", t.data.cols()},
                   {"offset", offset}});
    offset += static_cast<std::uint64_t>(t.data.size());
  }
  json header = {{"config", config.to_json()}, {"tensors", dir}};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint file for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const NamedTensor& t : tensors) {
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(Scalar)));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

std::pair<TransformerParams, TransformerConfig> load_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint file: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not a checkpoint file: " + path);

  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError("truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw ParseError("bad checkpoint header: " + std::string(e.what()));
  }
  const TransformerConfig config = TransformerConfig::from_json(header.at("config"));
  TransformerParams params = TransformerParams::zeros(config);
  std::vector<NamedTensor> tensors = named_tensors(params);

  const json& dir = header.at("tensors");
  if (dir.size() != tensors.size())
    throw SchemaError("checkpoint tensor count does not match config");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const json& entry = dir[i];
    if (entry.at("name").get<std::string>() != tensors[i].name)
      throw SchemaError("checkpoint tensor name mismatch: expected " +
                        tensors[i].name + ", found " +
                        entry.at("name").get<std::string>());
    if (entry.at("rows").get<Eigen::Index>() != tensors[i].data.rows() ||
        entry.at("cols").get<Eigen::Index>() != tensors[i].data.cols())
      throw SchemaError("checkpoint tensor shape mismatch for " + tensors[i].name);
    in.read(reinterpret_cast<char*>(tensors[i].data.data()),
            static_cast<std::streamsize>(tensors[i].data.size() * sizeof(Scalar)));
    if (!in) throw ParseError("truncated checkpoint payload: " + path);
  }
  return {std::move(params), config};
}

}  // namespace pak
