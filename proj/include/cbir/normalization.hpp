#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbir/color_features.hpp"
#include "cbir/texture_features.hpp"

namespace cbir {

/// Per-dimension corpus bounds for min-max scaling of color and texture vectors.
struct CorpusNormalization {
    ColorFeatureVector color_min{};
    ColorFeatureVector color_max{};
    TextureFeatureVector texture_min{};
    TextureFeatureVector texture_max{};
    std::uint64_t fitted_on = 0;

    bool operator==(const CorpusNormalization&) const = default;
};

inline constexpr std::uint32_t kNormalizationVersion = 1;

/// Little-endian: "CBNM", u32 version, u64 fitted_on, then the four bound arrays as f64.
std::vector<std::uint8_t> serialize(const CorpusNormalization& n);
CorpusNormalization deserialize_normalization(std::span<const std::uint8_t> bytes);

}  // namespace cbir
