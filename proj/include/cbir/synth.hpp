#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cbir/imagecore.hpp"

namespace cbir::synth {

/// Procedural shape classes; index i is used as category code i.
enum class ShapeKind { Disk, Rectangle, Cross, Triangle, Ring, Ellipse, LShape, Diamond, Star };

inline constexpr std::size_t kShapeKinds = 9;

std::string_view shape_name(ShapeKind kind);

struct RenderOptions {
    std::size_t side = 128;
    /// Max center offset as a fraction of the side.
    double max_offset = 0.12;
    /// Shape radius range as a fraction of half the side.
    double min_scale = 0.45;
    double max_scale = 0.75;
    /// Uniform per-pixel noise amplitude added to every channel.
    int noise = 6;
};

/// One filled shape in a random bright color on a random dark background.
RasterImage render_shape(ShapeKind kind, std::mt19937_64& rng, const RenderOptions& opt = {});

struct Sample {
    RasterImage image;
    int category = 0;
    std::string name;
};

/// `per_class` images for each of the first `classes` shape kinds, in
/// class-major order, from a single seeded stream.
std::vector<Sample> corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed,
                           const RenderOptions& opt = {});

}  // namespace cbir::synth
