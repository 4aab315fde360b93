#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tenf/tensor.hpp"

// One array per file: 8 magic bytes, u32 format version, u32 element type
// code (1 = float64), u32 mode count, u64 extents, then the raw buffer in
// storage order. All fields are fixed little-endian regardless of host, so
// round trips are bit-exact and files are portable.

namespace tenf {

void save_tensor(const Tensor &t, const std::filesystem::path &path);
Tensor load_tensor(const std::filesystem::path &path);

// 16-bit binary PGM (P5, maxval 65535, big-endian samples per the format).
// Values are clamped to [0, 1]; 1.0 maps to 65535.
void write_pgm16(const std::filesystem::path &path, const std::vector<double> &pixels, Index width,
                 Index height);

// Flat key-value text: one `key = value` per line, '#' comments, repeated
// keys allowed (returned in file order).
using KeyValues = std::vector<std::pair<std::string, std::string>>;
KeyValues read_key_values(const std::filesystem::path &path);

uint64_t fnv1a(const void *data, size_t bytes, uint64_t seed = 0xcbf29ce484222325ull);
uint64_t tensor_hash(const Tensor &t);

} // namespace tenf
