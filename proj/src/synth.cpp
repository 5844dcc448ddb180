#include "cbir/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace cbir::synth {

std::string_view shape_name(ShapeKind kind) {
    static constexpr std::array<std::string_view, kShapeKinds> names = {
        "disk", "rectangle", "cross", "triangle", "ring", "ellipse", "lshape", "diamond", "star"};
    return names[static_cast<std::size_t>(kind)];
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// Point-in-shape test in a frame centered on the shape, scaled so the shape
// roughly fills the unit disk.
bool inside(ShapeKind kind, double x, double y, double aspect) {
    const double ax = std::abs(x), ay = std::abs(y);
    switch (kind) {
        case ShapeKind::Disk: return x * x + y * y <= 1.0;
        case ShapeKind::Rectangle: return ax <= 0.9 && ay <= 0.9 * aspect;
        case ShapeKind::Cross: return (ax <= 0.95 && ay <= 0.28) || (ax <= 0.28 && ay <= 0.95);
        case ShapeKind::Triangle: return y >= -0.9 && y <= 0.8 && ax <= (y + 0.9) / 1.7;
        case ShapeKind::Ring: {
            const double r2 = x * x + y * y;
            return r2 <= 1.0 && r2 >= 0.45;
        }
        case ShapeKind::Ellipse: return (x * x) / 1.0 + (y * y) / (0.35 * 0.35) <= 1.0;
        case ShapeKind::LShape: return (x >= -0.9 && x <= -0.3 && y >= -0.9 && y <= 0.9) ||
                                       (x >= -0.9 && x <= 0.9 && y >= 0.3 && y <= 0.9);
        case ShapeKind::Diamond: return ax + ay <= 1.0;
        case ShapeKind::Star: {
            const double r = std::hypot(x, y);
            const double theta = std::atan2(y, x);
            const double lobe = 0.55 + 0.4 * std::cos(5.0 * theta);
            return r <= lobe;
        }
    }
    return false;
}

std::uint8_t clamp_byte(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

}  // namespace

RasterImage render_shape(ShapeKind kind, std::mt19937_64& rng, const RenderOptions& opt) {
    const double side = static_cast<double>(opt.side);
    const double cx = side / 2.0 + uniform(rng, -opt.max_offset, opt.max_offset) * side;
    const double cy = side / 2.0 + uniform(rng, -opt.max_offset, opt.max_offset) * side;
    const double radius = uniform(rng, opt.min_scale, opt.max_scale) * side / 2.0;
    const double aspect = uniform(rng, 0.55, 0.9);
    const Rgb bg{static_cast<std::uint8_t>(uniform_int(rng, 0, 90)), static_cast<std::uint8_t>(uniform_int(rng, 0, 90)),
                 static_cast<std::uint8_t>(uniform_int(rng, 0, 90))};
    const Rgb fg{static_cast<std::uint8_t>(uniform_int(rng, 150, 255)),
                 static_cast<std::uint8_t>(uniform_int(rng, 150, 255)),
                 static_cast<std::uint8_t>(uniform_int(rng, 150, 255))};

    RasterImage img(opt.side, opt.side);
    for (std::size_t r = 0; r < opt.side; ++r) {
        for (std::size_t c = 0; c < opt.side; ++c) {
            const double x = (static_cast<double>(c) + 0.5 - cx) / radius;
            const double y = (static_cast<double>(r) + 0.5 - cy) / radius;
            const Rgb base = inside(kind, x, y, aspect) ? fg : bg;
            const int n = opt.noise > 0 ? uniform_int(rng, -opt.noise, opt.noise) : 0;
            img.at(r, c) = {clamp_byte(base.r + n), clamp_byte(base.g + n), clamp_byte(base.b + n)};
        }
    }
    return img;
}

std::vector<Sample> corpus(std::size_t classes, std::size_t per_class, std::uint64_t seed, const RenderOptions& opt) {
    std::mt19937_64 rng(seed);
    std::vector<Sample> out;
    for (std::size_t k = 0; k < classes; ++k) {
        const auto kind = static_cast<ShapeKind>(k % kShapeKinds);
        for (std::size_t i = 0; i < per_class; ++i) {
            out.push_back({render_shape(kind, rng, opt), static_cast<int>(k),
                           std::string(shape_name(kind)) + "_" + std::to_string(i)});
        }
    }
    return out;
}

}  // namespace cbir::synth
