#pragma once

#include <array>
#include <optional>

#include "cbir/imagecore.hpp"
#include "cbir/numerics.hpp"

namespace cbir {

inline constexpr std::size_t kShapeFeatures = 30;
inline constexpr std::size_t kSpectrumSide = 128;
using ShapeDescriptor = std::array<double, kShapeFeatures>;

/// Intermediate images of the shape pipeline, captured on request.
struct ShapeTrace {
    ChannelMatrix reconstruction;
    BinaryImage binary;
    BinaryImage edges;
    BinaryImage skeleton;
    BinaryImage skeleton_grid;
    ChannelMatrix log_spectrum;
};

/// Descriptor from a binary skeleton: resize to the spectrum grid, FFT,
/// center, log(1 + |F|), keep the 30 largest (row-major tie-break) divided
/// by the largest. Throws EmptyShape for an empty skeleton.
ShapeDescriptor descriptor_from_skeleton(const BinaryImage& skeleton, ShapeTrace* trace = nullptr);

/// The full pipeline: grayscale, size cap, 2-level Haar with details
/// zeroed, reconstruction, Otsu binarization, Sobel edges, morphological
/// skeleton, then descriptor_from_skeleton.
ShapeDescriptor shape_descriptor(const RasterImage& img, ShapeTrace* trace = nullptr);

/// Same pipeline starting at a grayscale channel.
ShapeDescriptor shape_descriptor(const ChannelMatrix& gray, ShapeTrace* trace = nullptr);

}  // namespace cbir
