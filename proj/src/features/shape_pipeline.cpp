#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbir/shape_pipeline.hpp"

namespace cbir {

ShapeDescriptor descriptor_from_skeleton(const BinaryImage& skeleton, ShapeTrace* trace) {
    const BinaryImage grid = resize_binary_nearest(skeleton, kSpectrumSide, kSpectrumSide);
    if (count_foreground(grid) == 0) throw Error(ErrorCode::EmptyShape, "skeleton has no foreground");

    ChannelMatrix signal(grid.rows(), grid.cols());
    std::transform(grid.values().begin(), grid.values().end(), signal.values().begin(),
                   [](std::uint8_t v) { return v ? 1.0 : 0.0; });
    const ComplexMatrix spectrum = fftshift(fft2(signal));

    ChannelMatrix log_mag(spectrum.rows(), spectrum.cols());
    std::transform(spectrum.values().begin(), spectrum.values().end(), log_mag.values().begin(),
                   [](const std::complex<double>& z) { return std::log1p(std::abs(z)); });

    const auto t = log_mag.values();
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + kShapeFeatures, order.end(),
                      [&](std::size_t a, std::size_t b) { return t[a] > t[b] || (t[a] == t[b] && a < b); });

    const double top = t[order[0]];
    if (!(top > 0.0)) throw Error(ErrorCode::EmptyShape, "degenerate spectrum");
    ShapeDescriptor out{};
    for (std::size_t i = 0; i < kShapeFeatures; ++i) out[i] = t[order[i]] / top;

    if (trace) {
        trace->skeleton_grid = grid;
        trace->log_spectrum = std::move(log_mag);
    }
    return out;
}

ShapeDescriptor shape_descriptor(const ChannelMatrix& gray, ShapeTrace* trace) {
    const ChannelMatrix padded = pad_square_block(cap_size(gray), 4);
    WaveletDecomposition dec = dwt2_multilevel(padded, 2);
    for (auto& level : dec.details) {
        for (ChannelMatrix* band : {&level.hl, &level.lh, &level.hh})
            std::fill(band->values().begin(), band->values().end(), 0.0);
    }
    const ChannelMatrix smooth = idwt2(dec);

    BinaryImage binary;
    try {
        binary = binarize_otsu(smooth);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantChannel) throw;
        throw Error(ErrorCode::EmptyShape, "image has no contrast to binarize");
    }
    const BinaryImage edges = sobel_edges(binary);
    BinaryImage skeleton = morph_skeleton(edges, StructuringElement::cross3());
    if (count_foreground(skeleton) == 0) throw Error(ErrorCode::EmptyShape, "no edges survive skeletonization");

    if (trace) {
        trace->reconstruction = smooth;
        trace->binary = binary;
        trace->edges = edges;
        trace->skeleton = skeleton;
    }
    return descriptor_from_skeleton(skeleton, trace);
}

ShapeDescriptor shape_descriptor(const RasterImage& img, ShapeTrace* trace) {
    return shape_descriptor(to_grayscale(img), trace);
}

}  // namespace cbir
