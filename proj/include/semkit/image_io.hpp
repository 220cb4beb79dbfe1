#pragma once

#include "semkit/core.hpp"

#include <cstdint>
#include <filesystem>

namespace semkit {

/// Reads an 8- or 16-bit PNG or TIFF and scales codes to [0,1] by the format maximum.
/// Multi-channel inputs are collapsed to the unweighted mean of the colour channels;
/// an alpha channel, if present, is ignored.
Image load_image(const std::filesystem::path& path);

/// Clamps to [0,1] and quantizes with round-half-up. Format follows the extension
/// (.png, .tif, .tiff).
void save_image(const Image& img, const std::filesystem::path& path, int bit_depth = 8);

/// Removes the bottom floor(H * fraction) rows.
Image bottom_crop(const Image& img, double fraction);

/// Integer code that save_image writes for a value at the given depth.
std::uint32_t quantize(double value, int bit_depth);

}  // namespace semkit
