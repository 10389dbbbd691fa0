#pragma once

#include <filesystem>

#include "meshwarp/image.hpp"

namespace meshwarp {

/// Reads an 8-bit PNG. Gray and palette inputs are expanded and alpha is
/// dropped, so the result has `channels` channels (1 or 3).
ImageU8 read_png(const std::filesystem::path& path, int channels = 3);
ImageU16 read_png16(const std::filesystem::path& path);

/// Writes 1-channel (gray) or 3-channel (RGB) 8-bit images.
void write_png(const std::filesystem::path& path, const ImageU8& image);
/// Writes a 1-channel 16-bit gray image.
void write_png16(const std::filesystem::path& path, const ImageU16& image);

}  // namespace meshwarp
