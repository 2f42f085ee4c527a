#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vigil/model.hpp"

namespace vigil {

// IEEE CRC-32 (reflected, init/xorout 0xFFFFFFFF).
uint32_t crc32(std::span<const uint8_t> bytes);
uint32_t crc32_update(uint32_t state, std::span<const uint8_t> bytes);

// Weight file layout (little-endian): magic "VGL1", format version u32,
// length-prefixed canonical model config text (u32), tensor count u32,
// then per tensor: name length u16 + name, rank u8, extents u32[rank],
// raw f32 payload; a CRC-32 of all preceding bytes trails the file.
std::vector<uint8_t> encode_weights(const ModelSpec& spec,
                                    const ModelWeights& weights);
std::pair<ModelSpec, ModelWeights> decode_weights(std::span<const uint8_t> bytes);

void save_weights(const ModelSpec& spec, const ModelWeights& weights,
                  const std::string& path);
std::pair<ModelSpec, ModelWeights> load_weights(const std::string& path);

}  // namespace vigil
