#include <algorithm>
#include <cmath>

#include "cbir/imagecore.hpp"

namespace cbir {

RasterImage::RasterImage(std::size_t width, std::size_t height, Rgb fill)
    : RasterImage(width, height, std::vector<Rgb>(width * height, fill)) {}

RasterImage::RasterImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width_ == 0 || height_ == 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    if (pixels_.size() != width_ * height_)
        throw Error(ErrorCode::InvalidArgument, "pixel count does not match dimensions");
}

Channels split_channels(const RasterImage& img) {
    Channels ch{ChannelMatrix(img.height(), img.width()), ChannelMatrix(img.height(), img.width()),
                ChannelMatrix(img.height(), img.width())};
    for (std::size_t r = 0; r < img.height(); ++r) {
        for (std::size_t c = 0; c < img.width(); ++c) {
            const Rgb& px = img.at(r, c);
            ch.red(r, c) = px.r;
            ch.green(r, c) = px.g;
            ch.blue(r, c) = px.b;
        }
    }
    return ch;
}

namespace {

std::uint8_t to_sample(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

}  // namespace

RasterImage merge_channels(const Channels& ch) {
    const std::size_t rows = ch.red.rows();
    const std::size_t cols = ch.red.cols();
    if (ch.green.rows() != rows || ch.green.cols() != cols || ch.blue.rows() != rows || ch.blue.cols() != cols)
        throw Error(ErrorCode::DimMismatch, "channel dimensions differ");
    RasterImage img(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            img.at(r, c) = {to_sample(ch.red(r, c)), to_sample(ch.green(r, c)), to_sample(ch.blue(r, c))};
    return img;
}

ChannelMatrix to_grayscale(const RasterImage& img) {
    ChannelMatrix gray(img.height(), img.width());
    for (std::size_t r = 0; r < img.height(); ++r) {
        for (std::size_t c = 0; c < img.width(); ++c) {
            const Rgb& px = img.at(r, c);
            gray(r, c) = 0.299 * px.r + 0.587 * px.g + 0.114 * px.b;
        }
    }
    return gray;
}

ChannelMatrix resize_bilinear(const ChannelMatrix& ch, std::size_t new_rows, std::size_t new_cols) {
    if (new_rows == 0 || new_cols == 0) throw Error(ErrorCode::InvalidArgument, "resize target must be non-empty");
    if (new_rows == ch.rows() && new_cols == ch.cols()) return ch;

    // Corner-aligned: output index 0 maps to input 0, the last index to the last.
    const auto scale = [](std::size_t from, std::size_t to) {
        return to > 1 ? static_cast<double>(from - 1) / static_cast<double>(to - 1) : 0.0;
    };
    const double sr = scale(ch.rows(), new_rows);
    const double sc = scale(ch.cols(), new_cols);

    ChannelMatrix out(new_rows, new_cols);
    for (std::size_t i = 0; i < new_rows; ++i) {
        const double y = static_cast<double>(i) * sr;
        const std::size_t y0 = std::min(static_cast<std::size_t>(y), ch.rows() - 1);
        const std::size_t y1 = std::min(y0 + 1, ch.rows() - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t j = 0; j < new_cols; ++j) {
            const double x = static_cast<double>(j) * sc;
            const std::size_t x0 = std::min(static_cast<std::size_t>(x), ch.cols() - 1);
            const std::size_t x1 = std::min(x0 + 1, ch.cols() - 1);
            const double fx = x - static_cast<double>(x0);
            const double top = ch(y0, x0) + fx * (ch(y0, x1) - ch(y0, x0));
            const double bottom = ch(y1, x0) + fx * (ch(y1, x1) - ch(y1, x0));
            out(i, j) = top + fy * (bottom - top);
        }
    }
    return out;
}

std::pair<std::size_t, std::size_t> capped_dims(std::size_t rows, std::size_t cols, std::size_t max_side) {
    const std::size_t longer = std::max(rows, cols);
    if (longer <= max_side) return {rows, cols};
    const double f = static_cast<double>(max_side) / static_cast<double>(longer);
    const auto shrink = [&](std::size_t n) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(n) * f)));
    };
    return {rows == longer ? max_side : shrink(rows), cols == longer ? max_side : shrink(cols)};
}

ChannelMatrix cap_size(const ChannelMatrix& ch, std::size_t max_side) {
    const auto [rows, cols] = capped_dims(ch.rows(), ch.cols(), max_side);
    return resize_bilinear(ch, rows, cols);
}

RasterImage cap_size(const RasterImage& img, std::size_t max_side) {
    const auto [rows, cols] = capped_dims(img.height(), img.width(), max_side);
    if (rows == img.height() && cols == img.width()) return img;
    const Channels ch = split_channels(img);
    return merge_channels({resize_bilinear(ch.red, rows, cols), resize_bilinear(ch.green, rows, cols),
                           resize_bilinear(ch.blue, rows, cols)});
}

ChannelMatrix pad_square_block(const ChannelMatrix& ch, std::size_t block) {
    if (block == 0) throw Error(ErrorCode::InvalidArgument, "block must be >= 1");
    const std::size_t longer = std::max(ch.rows(), ch.cols());
    const std::size_t side = (longer + block - 1) / block * block;
    if (side == ch.rows() && side == ch.cols()) return ch;
    ChannelMatrix out(side, side, 0.0);
    for (std::size_t r = 0; r < ch.rows(); ++r) std::copy(ch.row(r).begin(), ch.row(r).end(), out.row(r).begin());
    return out;
}

}  // namespace cbir
