#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbir/error.hpp"

namespace cbir {

/// Dense row-major matrix. Used for real-valued channels and binary masks.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        if (data_.size() != rows_ * cols_)
            throw Error(ErrorCode::InvalidArgument, "matrix value count does not match dimensions");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using ChannelMatrix = Matrix<double>;

/// Foreground mask; stored as bytes (0/1) so spans and comparisons stay cheap.
using BinaryImage = Matrix<std::uint8_t>;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    bool operator==(const Rgb&) const = default;
};

class RasterImage {
public:
    RasterImage(std::size_t width, std::size_t height, Rgb fill = {});
    RasterImage(std::size_t width, std::size_t height, std::vector<Rgb> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }

    Rgb& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
    const Rgb& at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
    std::span<const Rgb> pixels() const noexcept { return pixels_; }

    bool operator==(const RasterImage&) const = default;

private:
    std::size_t width_;
    std::size_t height_;
    std::vector<Rgb> pixels_;
};

/// Neighborhood offsets (row delta, col delta). Must contain the origin and be
/// symmetric so that erosion and dilation are adjoint.
class StructuringElement {
public:
    using Offset = std::pair<int, int>;

    explicit StructuringElement(std::vector<Offset> offsets);

    /// {(0,0), (+-1,0), (0,+-1)}
    static StructuringElement cross3();
    static StructuringElement square3();

    std::span<const Offset> offsets() const noexcept { return offsets_; }

private:
    std::vector<Offset> offsets_;
};

enum class ImageFormat { Ppm, Pgm, Png, Jpeg, Bmp, Other };

std::string_view format_name(ImageFormat f) noexcept;
std::string_view content_type(ImageFormat f) noexcept;

/// Sniffs the payload's magic bytes; returns Other when nothing matches.
ImageFormat detect_format(std::span<const std::uint8_t> bytes) noexcept;

/// Binary PPM (P6) and PGM (P5) with maxval 255 are decoded natively.
/// PNG/JPEG/BMP are delegated to OpenCV when the build has it.
RasterImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_ppm(const RasterImage& img);
std::vector<std::uint8_t> encode_pgm(const ChannelMatrix& ch);
std::vector<std::uint8_t> encode_pgm(const BinaryImage& bw);

struct Channels {
    ChannelMatrix red;
    ChannelMatrix green;
    ChannelMatrix blue;
};

Channels split_channels(const RasterImage& img);

/// Inverse of split_channels; values are rounded and clamped to [0,255].
RasterImage merge_channels(const Channels& ch);

/// ITU-R 601 luma.
ChannelMatrix to_grayscale(const RasterImage& img);

/// Corner-aligned bilinear interpolation.
ChannelMatrix resize_bilinear(const ChannelMatrix& ch, std::size_t new_rows, std::size_t new_cols);

inline constexpr std::size_t kMaxImageSide = 512;

/// Output dims after bounding the longer side by `max_side` (aspect preserved).
std::pair<std::size_t, std::size_t> capped_dims(std::size_t rows, std::size_t cols,
                                                std::size_t max_side = kMaxImageSide);
ChannelMatrix cap_size(const ChannelMatrix& ch, std::size_t max_side = kMaxImageSide);
RasterImage cap_size(const RasterImage& img, std::size_t max_side = kMaxImageSide);

/// Zero-pads to an SxS matrix, S = ceil(max(rows, cols) / block) * block.
ChannelMatrix pad_square_block(const ChannelMatrix& ch, std::size_t block);

/// 256-bin Otsu threshold on the rounded, clamped channel. Ties go to the
/// smallest threshold. Throws ConstantChannel when every value is the same.
int otsu_threshold(const ChannelMatrix& ch);

/// Foreground = rounded value strictly above the Otsu threshold.
BinaryImage binarize_otsu(const ChannelMatrix& ch);

BinaryImage sobel_edges(const BinaryImage& bw);

BinaryImage erode(const BinaryImage& bw, const StructuringElement& se);
BinaryImage dilate(const BinaryImage& bw, const StructuringElement& se);
BinaryImage morph_open(const BinaryImage& bw, const StructuringElement& se);

/// Lantuejoul skeleton: union over k of E_k(A) minus open(E_k(A)).
BinaryImage morph_skeleton(const BinaryImage& bw, const StructuringElement& se);

BinaryImage resize_binary_nearest(const BinaryImage& bw, std::size_t new_rows, std::size_t new_cols);

std::size_t count_foreground(const BinaryImage& bw) noexcept;

}  // namespace cbir
