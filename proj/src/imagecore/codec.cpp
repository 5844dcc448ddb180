#include <algorithm>
#include <cctype>
#include <cstring>
#include <string>

#include "cbir/imagecore.hpp"

#ifdef CBIR_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace cbir {

namespace {

bool starts_with(std::span<const std::uint8_t> bytes, std::initializer_list<std::uint8_t> magic) {
    if (bytes.size() < magic.size()) return false;
    return std::equal(magic.begin(), magic.end(), bytes.begin());
}

// Netpbm header tokenizer: whitespace separated decimal fields, '#' comments
// run to end of line.
class PnmHeader {
public:
    explicit PnmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t next_uint() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw Error(ErrorCode::CorruptPayload, "truncated or malformed netpbm header");
        std::size_t value = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1u << 24)) throw Error(ErrorCode::CorruptPayload, "netpbm header field too large");
            ++pos_;
        }
        return value;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw Error(ErrorCode::CorruptPayload, "missing raster separator");
        return pos_ + 1;
    }

    void skip(std::size_t n) { pos_ += n; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

RasterImage decode_pnm(std::span<const std::uint8_t> bytes, bool color) {
    PnmHeader header(bytes);
    header.skip(2);
    const std::size_t width = header.next_uint();
    const std::size_t height = header.next_uint();
    const std::size_t maxval = header.next_uint();
    if (width == 0 || height == 0) throw Error(ErrorCode::CorruptPayload, "zero image dimension");
    if (maxval != 255) throw Error(ErrorCode::UnsupportedFormat, "only maxval 255 is supported");
    const std::size_t offset = header.raster_offset();
    const std::size_t channels = color ? 3 : 1;
    const std::size_t need = width * height * channels;
    if (bytes.size() - offset < need) throw Error(ErrorCode::CorruptPayload, "truncated raster");

    std::vector<Rgb> pixels(width * height);
    const std::uint8_t* p = bytes.data() + offset;
    for (auto& px : pixels) {
        if (color) {
            px = {p[0], p[1], p[2]};
            p += 3;
        } else {
            px = {p[0], p[0], p[0]};
            ++p;
        }
    }
    return RasterImage(width, height, std::move(pixels));
}

#ifdef CBIR_HAVE_OPENCV
RasterImage decode_delegated(std::span<const std::uint8_t> bytes) {
    cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (bgr.empty()) throw Error(ErrorCode::CorruptPayload, "delegated decoder rejected payload");
    std::vector<Rgb> pixels(static_cast<std::size_t>(bgr.rows) * bgr.cols);
    for (int r = 0; r < bgr.rows; ++r) {
        const auto* row = bgr.ptr<cv::Vec3b>(r);
        for (int c = 0; c < bgr.cols; ++c)
            pixels[static_cast<std::size_t>(r) * bgr.cols + c] = {row[c][2], row[c][1], row[c][0]};
    }
    return RasterImage(bgr.cols, bgr.rows, std::move(pixels));
}
#endif

std::vector<std::uint8_t> pnm_header(const char* magic, std::size_t w, std::size_t h) {
    const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    return {s.begin(), s.end()};
}

std::uint8_t to_byte(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(v + 0.5);
}

}  // namespace

std::string_view format_name(ImageFormat f) noexcept {
    switch (f) {
        case ImageFormat::Ppm: return "ppm";
        case ImageFormat::Pgm: return "pgm";
        case ImageFormat::Png: return "png";
        case ImageFormat::Jpeg: return "jpeg";
        case ImageFormat::Bmp: return "bmp";
        case ImageFormat::Other: return "other";
    }
    return "other";
}

std::string_view content_type(ImageFormat f) noexcept {
    switch (f) {
        case ImageFormat::Ppm: return "image/x-portable-pixmap";
        case ImageFormat::Pgm: return "image/x-portable-graymap";
        case ImageFormat::Png: return "image/png";
        case ImageFormat::Jpeg: return "image/jpeg";
        case ImageFormat::Bmp: return "image/bmp";
        case ImageFormat::Other: return "application/octet-stream";
    }
    return "application/octet-stream";
}

ImageFormat detect_format(std::span<const std::uint8_t> bytes) noexcept {
    if (starts_with(bytes, {'P', '6'})) return ImageFormat::Ppm;
    if (starts_with(bytes, {'P', '5'})) return ImageFormat::Pgm;
    if (starts_with(bytes, {0x89, 'P', 'N', 'G'})) return ImageFormat::Png;
    if (starts_with(bytes, {0xFF, 0xD8, 0xFF})) return ImageFormat::Jpeg;
    if (starts_with(bytes, {'B', 'M'})) return ImageFormat::Bmp;
    return ImageFormat::Other;
}

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    switch (detect_format(bytes)) {
        case ImageFormat::Ppm: return decode_pnm(bytes, true);
        case ImageFormat::Pgm: return decode_pnm(bytes, false);
        case ImageFormat::Png:
        case ImageFormat::Jpeg:
        case ImageFormat::Bmp:
#ifdef CBIR_HAVE_OPENCV
            return decode_delegated(bytes);
#else
            throw Error(ErrorCode::UnsupportedFormat, "built without a delegated decoder");
#endif
        case ImageFormat::Other: break;
    }
    throw Error(ErrorCode::UnsupportedFormat, "unrecognized image payload");
}

std::vector<std::uint8_t> encode_ppm(const RasterImage& img) {
    auto out = pnm_header("P6", img.width(), img.height());
    out.reserve(out.size() + img.pixels().size() * 3);
    for (const auto& px : img.pixels()) {
        out.push_back(px.r);
        out.push_back(px.g);
        out.push_back(px.b);
    }
    return out;
}

std::vector<std::uint8_t> encode_pgm(const ChannelMatrix& ch) {
    auto out = pnm_header("P5", ch.cols(), ch.rows());
    for (double v : ch.values()) out.push_back(to_byte(v));
    return out;
}

std::vector<std::uint8_t> encode_pgm(const BinaryImage& bw) {
    auto out = pnm_header("P5", bw.cols(), bw.rows());
    for (auto v : bw.values()) out.push_back(v ? 255 : 0);
    return out;
}

}  // namespace cbir
