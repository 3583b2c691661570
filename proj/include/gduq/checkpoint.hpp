#pragma once

#include <optional>
#include <string>

#include "gduq/anchoring.hpp"
#include "gduq/model.hpp"

#include "json.hpp"

namespace gduq {

// On-disk model: `<prefix>.json` manifest (spec, tensor shapes, anchor-source
// metadata, offsets) plus `<prefix>.bin` holding raw little-endian 64-bit
// floats for every array, in manifest order. See FORMAT.md.
struct Checkpoint {
  ModelSpec spec;
  Params params;
  std::optional<AnchorSource> source;
};

nlohmann::ordered_json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::ordered_json& j);

void save_checkpoint(const std::string& prefix, const ModelSpec& spec, const Params& params,
                     const AnchorSource* source);
Checkpoint load_checkpoint(const std::string& prefix);

}  // namespace gduq
