#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dprune/mask.hpp"

namespace dprune {

// Binary checkpoint of a pruned model (theta, T). All integers little-endian.
//
//   offset  size        field
//   0       4           magic "DPRN"
//   4       4   u32     format version (1)
//   8       4   u32     layer count L
//   12      12*L        per layer: u32 fan_in, u32 fan_out, u32 activation
//                       (0 = ReLU, 1 = Identity, 2 = Softmax)
//   ...     8*P f64     per layer: weights (row-major [fan_in, fan_out]) then bias
//   ...     ceil(W/8)   mask bits over the W flattened weights, bit i stored in
//                       byte i/8 at position i%8 (LSB first); padding bits zero
//
// Round trips are bitwise lossless.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const MaskedModel& m);
// Throws FormatError on bad magic, unknown version, truncation or trailing bytes.
MaskedModel decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const MaskedModel& m);
MaskedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dprune
