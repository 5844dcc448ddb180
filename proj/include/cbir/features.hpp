#pragma once

#include "cbir/color_features.hpp"
#include "cbir/shape_pipeline.hpp"
#include "cbir/texture_features.hpp"

namespace cbir {

struct ImageFeatures {
    ColorFeatureVector color{};
    TextureFeatureVector texture{};
    ShapeDescriptor shape{};
};

/// Runs the three extractors on one decoded image. Shape runs first so a
/// blank image fails fast with EmptyShape.
ImageFeatures extract_features(const RasterImage& img);

}  // namespace cbir
