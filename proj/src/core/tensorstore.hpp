#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace gloss {

// Checkpoint container: an 8-byte little-endian header length, a UTF-8 JSON
// header mapping tensor names to {shape, offset, nbytes} plus the model
// config and free-form metadata, followed by the concatenated little-endian
// float32 payloads. Offsets are relative to the payload start and assigned
// in lexicographic name order, so save -> load -> save is byte-identical.

std::vector<uint8_t> serialize_checkpoint(const TensorMap& map);
TensorMap deserialize_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint(const TensorMap& map, const std::string& path);
TensorMap load_checkpoint(const std::string& path);

std::string checkpoint_hash(const TensorMap& map);  // fnv64 over serialized bytes

}  // namespace gloss
