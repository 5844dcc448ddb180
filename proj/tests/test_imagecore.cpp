#include <set>
#include <string>

#include "cbir/imagecore.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cbir;
using testing::offsets;
using testing::SetMorph;
using testing::subset;
using testing::to_set;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Threshold maximizing between-class variance, scanned in long double.
// Empty bins leave n0 and s0 unchanged, so plateaus compare exactly equal and
// the strict comparison keeps the first (smallest) threshold.
int otsu_oracle(const ChannelMatrix& ch) {
    std::array<long double, 256> h{};
    for (double v : ch.values()) h[static_cast<int>(std::clamp(std::round(v), 0.0, 255.0))] += 1;
    long double n = 0, s = 0;
    for (int v = 0; v < 256; ++v) {
        n += h[v];
        s += h[v] * v;
    }
    int best = -1;
    long double best_var = -1;
    long double n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += h[t];
        s0 += h[t] * t;
        const long double n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const long double mu0 = s0 / n0, mu1 = (s - s0) / n1;
        const long double var = n0 * n1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best = t;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("ppm round trip and header comments") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> u(0, 255);
    std::vector<Rgb> px(7 * 5);
    for (auto& p : px) p = {static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng)), static_cast<std::uint8_t>(u(rng))};
    const RasterImage img(7, 5, px);
    const auto bytes = encode_ppm(img);
    CHECK(detect_format(bytes) == ImageFormat::Ppm);
    CHECK(decode_image(bytes) == img);

    auto commented = bytes_of("P6\n# made by hand\n2 1\n# another\n255\n");
    for (std::uint8_t b : {1, 2, 3, 4, 5, 6}) commented.push_back(b);
    const RasterImage tiny = decode_image(commented);
    CHECK(tiny.width() == 2);
    CHECK(tiny.at(0, 1) == Rgb{4, 5, 6});
}

TEST_CASE("pgm decodes to equal channels") {
    auto bytes = bytes_of("P5 2 2 255\n");
    for (std::uint8_t b : {0, 50, 100, 255}) bytes.push_back(b);
    const RasterImage img = decode_image(bytes);
    CHECK(img.at(1, 0) == Rgb{100, 100, 100});
    CHECK(img.at(1, 1) == Rgb{255, 255, 255});
}

TEST_CASE("codec errors") {
    auto code_of = [](const std::vector<std::uint8_t>& b) {
        try {
            decode_image(b);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code_of(bytes_of("hello world")) == ErrorCode::UnsupportedFormat);
    CHECK(code_of({}) == ErrorCode::UnsupportedFormat);
    CHECK(code_of(bytes_of("P6 4 4 255\n\x01\x02")) == ErrorCode::CorruptPayload);
    CHECK(code_of(bytes_of("P6 4")) == ErrorCode::CorruptPayload);
    CHECK(code_of(bytes_of("P6 1 1 65535\n\x01\x02\x03\x04\x05\x06")) == ErrorCode::UnsupportedFormat);
}

#ifdef CBIR_HAVE_OPENCV
TEST_CASE("png and bmp decode through the delegate") {
    const std::vector<std::uint8_t> png = {
        0x89, 0x50, 0x4e, 0x47, 0xd,  0xa,  0x1a, 0xa,  0x0,  0x0,  0x0,  0xd,  0x49, 0x48, 0x44, 0x52,
        0x0,  0x0,  0x0,  0x2,  0x0,  0x0,  0x0,  0x2,  0x8,  0x2,  0x0,  0x0,  0x0,  0xfd, 0xd4, 0x9a,
        0x73, 0x0,  0x0,  0x0,  0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0xc0,
        0xf0, 0x9f, 0x81, 0x81, 0x81, 0xe1, 0x3f, 0x97, 0x88, 0x1c, 0x0,  0x1a, 0x58, 0x3,  0x3a, 0x82,
        0xe0, 0xab, 0x53, 0x0,  0x0,  0x0,  0x0,  0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
    const std::vector<std::uint8_t> bmp = {
        0x42, 0x4d, 0x46, 0x0, 0x0,  0x0,  0x0,  0x0,  0x0,  0x0, 0x36, 0x0,  0x0, 0x0, 0x28, 0x0, 0x0, 0x0,
        0x2,  0x0,  0x0,  0x0, 0x2,  0x0,  0x0,  0x0,  0x1,  0x0, 0x18, 0x0,  0x0, 0x0, 0x0,  0x0, 0x10, 0x0,
        0x0,  0x0,  0xc4, 0xe, 0x0,  0x0,  0xc4, 0xe,  0x0,  0x0, 0x0,  0x0,  0x0, 0x0, 0x0,  0x0, 0x0, 0x0,
        0xff, 0x0,  0x0,  0x1e, 0x14, 0xa,  0x0,  0x0,  0x0,  0x0, 0xff, 0x0,  0xff, 0x0, 0x0, 0x0};
    for (const auto* bytes : {&png, &bmp}) {
        const RasterImage img = decode_image(*bytes);
        REQUIRE(img.width() == 2);
        CHECK(img.at(0, 0) == Rgb{255, 0, 0});
        CHECK(img.at(0, 1) == Rgb{0, 255, 0});
        CHECK(img.at(1, 0) == Rgb{0, 0, 255});
        CHECK(img.at(1, 1) == Rgb{10, 20, 30});
    }
    CHECK(detect_format(png) == ImageFormat::Png);
    CHECK(content_type(ImageFormat::Png) == "image/png");
}
#endif

TEST_CASE("split and merge are inverse, grayscale uses 601 luma") {
    const RasterImage img(3, 2, std::vector<Rgb>{{255, 0, 0}, {0, 255, 0}, {0, 0, 255}, {1, 2, 3}, {9, 9, 9}, {200, 100, 50}});
    CHECK(merge_channels(split_channels(img)) == img);
    const auto g = to_grayscale(img);
    CHECK(g(0, 0) == doctest::Approx(76.245));
    CHECK(g(0, 1) == doctest::Approx(149.685));
    CHECK(g(1, 1) == doctest::Approx(9.0));
}

TEST_CASE("bilinear resize keeps corners and constants") {
    ChannelMatrix m(2, 2, std::vector<double>{0, 10, 20, 30});
    const auto up = resize_bilinear(m, 3, 3);
    CHECK(up(0, 0) == 0);
    CHECK(up(0, 2) == 10);
    CHECK(up(2, 0) == 20);
    CHECK(up(2, 2) == 30);
    CHECK(up(1, 1) == doctest::Approx(15));
    const auto flat = resize_bilinear(ChannelMatrix(5, 7, 42.0), 13, 3);
    for (double v : flat.values()) CHECK(v == doctest::Approx(42.0));
}

TEST_CASE("size cap preserves aspect") {
    CHECK(capped_dims(600, 1024) == std::pair<std::size_t, std::size_t>{300, 512});
    CHECK(capped_dims(2048, 100) == std::pair<std::size_t, std::size_t>{512, 25});
    CHECK(capped_dims(100, 80) == std::pair<std::size_t, std::size_t>{100, 80});
    const RasterImage big(1000, 10);
    const auto capped = cap_size(big);
    CHECK(capped.width() == 512);
    CHECK(capped.height() == 5);
}

TEST_CASE("pad to square block") {
    ChannelMatrix m(17, 5, 1.0);
    const auto p = pad_square_block(m, 16);
    CHECK(p.rows() == 32);
    CHECK(p.cols() == 32);
    CHECK(p(16, 4) == 1.0);
    CHECK(p(16, 5) == 0.0);
    CHECK(p(17, 0) == 0.0);
    CHECK(pad_square_block(ChannelMatrix(16, 16, 2.0), 16) == ChannelMatrix(16, 16, 2.0));
}

TEST_CASE("otsu matches brute force") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t rows = 1 + rng() % 20, cols = 2 + rng() % 20;
        ChannelMatrix m(rows, cols);
        const int modes = 1 + static_cast<int>(rng() % 4);
        std::vector<double> centers;
        for (int k = 0; k < modes; ++k) centers.push_back(static_cast<double>(rng() % 256));
        std::normal_distribution<double> noise(0, 1 + rng() % 30);
        for (double& v : m.values()) v = std::clamp(centers[rng() % modes] + noise(rng), 0.0, 255.0);
        if (otsu_oracle(m) < 0) continue;
        CHECK(otsu_threshold(m) == otsu_oracle(m));
    }
}

TEST_CASE("otsu on a two-level image picks the lower level") {
    ChannelMatrix m(4, 4, 10.0);
    m(1, 1) = m(1, 2) = m(2, 1) = 200.0;
    CHECK(otsu_threshold(m) == 10);
    const auto bw = binarize_otsu(m);
    CHECK(count_foreground(bw) == 3);
    CHECK(bw(1, 1) == 1);
    CHECK_THROWS_AS(otsu_threshold(ChannelMatrix(3, 3, 7.2)), Error);
    try {
        otsu_threshold(ChannelMatrix(3, 3, 7.2));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ConstantChannel);
    }
}

TEST_CASE("sobel on binary images") {
    BinaryImage dot(5, 5);
    dot(2, 2) = 1;
    const auto e = sobel_edges(dot);
    CHECK(e(2, 2) == 0);
    CHECK(count_foreground(e) == 8);

    BinaryImage square(10, 10);
    for (int r = 2; r < 8; ++r)
        for (int c = 2; c < 8; ++c) square(r, c) = 1;
    const auto se = sobel_edges(square);
    CHECK(se(4, 4) == 0);
    CHECK(se(2, 4) == 1);
    CHECK(se(1, 4) == 1);
    CHECK(se(0, 0) == 0);

    BinaryImage full(6, 6, 1);
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(sobel_edges(full)(r, 0) == 0);
        CHECK(sobel_edges(full)(0, r) == 0);
    }
    CHECK_THROWS_AS(sobel_edges(BinaryImage(2, 5)), Error);
}

TEST_CASE("structuring element validation") {
    CHECK_THROWS_AS(StructuringElement({{0, 1}, {0, -1}}), Error);
    CHECK_THROWS_AS(StructuringElement({{0, 0}, {0, 1}}), Error);
    CHECK(StructuringElement::cross3().offsets().size() == 5);
    CHECK(StructuringElement::square3().offsets().size() == 9);
}

TEST_CASE("morphology algebra and skeleton oracle") {
    std::mt19937_64 rng(99);
    for (const auto& se : {StructuringElement::cross3(), StructuringElement::square3()}) {
        const SetMorph oracle{12, 12, offsets(se)};
        for (int trial = 0; trial < 100; ++trial) {
            const auto a = testing::random_binary(12, 12, rng, 0.3 + 0.5 * (trial % 5) / 4.0);
            const auto er = erode(a, se);
            const auto di = dilate(a, se);
            const auto op = morph_open(a, se);
            const auto sk = morph_skeleton(a, se);
            CHECK(subset(er, a));
            CHECK(subset(a, di));
            CHECK(subset(op, a));
            CHECK(morph_open(op, se) == op);
            CHECK(subset(sk, a));
            CHECK(to_set(er) == oracle.erode(to_set(a)));
            CHECK(to_set(di) == oracle.dilate(to_set(a)));
            CHECK(to_set(sk) == oracle.skeleton(to_set(a)));
        }
    }
}

TEST_CASE("skeleton of a thin line is the line") {
    BinaryImage line(7, 9);
    for (int c = 1; c < 8; ++c) line(3, c) = 1;
    CHECK(morph_skeleton(line, StructuringElement::cross3()) == line);
    CHECK(count_foreground(morph_skeleton(BinaryImage(4, 4), StructuringElement::cross3())) == 0);
}

TEST_CASE("nearest resize") {
    BinaryImage m(2, 2, std::vector<std::uint8_t>{1, 0, 0, 1});
    const auto up = resize_binary_nearest(m, 4, 4);
    CHECK(up(0, 1) == 1);
    CHECK(up(1, 2) == 0);
    CHECK(up(3, 3) == 1);
    CHECK(count_foreground(up) == 8);
}
