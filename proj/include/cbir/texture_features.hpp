#pragma once

#include <array>

#include "cbir/imagecore.hpp"

namespace cbir {

inline constexpr std::size_t kTextureLevels = 4;
inline constexpr std::size_t kBandsPerChannel = 3 * kTextureLevels + 1;
inline constexpr std::size_t kTextureFeatures = 3 * kBandsPerChannel;
using TextureFeatureVector = std::array<double, kTextureFeatures>;

/// Spectral radius of each of the 13 sub-bands of one channel, ordered
/// AP4, then (HL, LH, HH) for levels 1..4. The channel is zero-padded to a
/// square whose side is a multiple of 16.
std::array<double, kBandsPerChannel> channel_texture(const ChannelMatrix& ch);

/// Concatenation of channel_texture over R, G, B of the size-capped image.
TextureFeatureVector texture_vector(const RasterImage& img);

}  // namespace cbir
