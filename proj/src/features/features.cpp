#include "cbir/features.hpp"

namespace cbir {

ImageFeatures extract_features(const RasterImage& img) {
    const RasterImage capped = cap_size(img);
    ImageFeatures f;
    f.shape = shape_descriptor(capped);
    f.color = color_vector(capped);
    f.texture = texture_vector(capped);
    return f;
}

}  // namespace cbir
