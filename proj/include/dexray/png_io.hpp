#pragma once

#include <filesystem>

#include "dexray/image.hpp"

namespace dexray::io {

// 8-bit, 3-channel PNG in BGR order. Throws IoError.
RawImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RawImage& image);

// Single-channel PNG with cells written as 0 / 255.
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace dexray::io
