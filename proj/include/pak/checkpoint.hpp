#pragma once

#include "pak/transformer.hpp"

#include <string>
#include <utility>

namespace pak {

/// Single-file archive: a magic tag, a JSON header with the config and a
/// shape-tagged tensor directory, then the raw 64-bit float payload.
void save_checkpoint(const std::string& path, const TransformerParams& params,
                     const TransformerConfig& config);

std::pair<TransformerParams, TransformerConfig> load_checkpoint(
    const std::string& path);

}  // namespace pak
