#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

#include "cbir/imagecore.hpp"

namespace cbir {

StructuringElement::StructuringElement(std::vector<Offset> offsets) : offsets_(std::move(offsets)) {
    std::sort(offsets_.begin(), offsets_.end());
    offsets_.erase(std::unique(offsets_.begin(), offsets_.end()), offsets_.end());
    if (!std::binary_search(offsets_.begin(), offsets_.end(), Offset{0, 0}))
        throw Error(ErrorCode::InvalidArgument, "structuring element must contain the origin");
    for (const auto& [dr, dc] : offsets_)
        if (!std::binary_search(offsets_.begin(), offsets_.end(), Offset{-dr, -dc}))
            throw Error(ErrorCode::InvalidArgument, "structuring element must be symmetric");
}

StructuringElement StructuringElement::cross3() {
    return StructuringElement({{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}});
}

StructuringElement StructuringElement::square3() {
    std::vector<Offset> all;
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) all.emplace_back(dr, dc);
    return StructuringElement(std::move(all));
}

namespace {

using Histogram = std::array<std::uint64_t, 256>;

Histogram byte_histogram(const ChannelMatrix& ch) {
    Histogram h{};
    for (double v : ch.values()) ++h[static_cast<std::size_t>(std::clamp(std::round(v), 0.0, 255.0))];
    return h;
}

int rounded_sample(double v) { return static_cast<int>(std::clamp(std::round(v), 0.0, 255.0)); }

bool inside(long r, long c, const BinaryImage& bw) {
    return r >= 0 && c >= 0 && r < static_cast<long>(bw.rows()) && c < static_cast<long>(bw.cols());
}

}  // namespace

int otsu_threshold(const ChannelMatrix& ch) {
    if (ch.empty()) throw Error(ErrorCode::InvalidArgument, "empty channel");
    const Histogram h = byte_histogram(ch);
    const auto occupied = std::count_if(h.begin(), h.end(), [](auto n) { return n > 0; });
    if (occupied < 2) throw Error(ErrorCode::ConstantChannel, "channel has a single intensity");

    // Between-class variance at threshold t is (s0*N - S*n0)^2 / (N^2 * n0 * n1);
    // the N^2 factor is common, so candidates are compared as exact fractions.
    using u128 = unsigned __int128;
    std::int64_t total_n = 0;
    std::int64_t total_s = 0;
    for (int v = 0; v < 256; ++v) {
        total_n += static_cast<std::int64_t>(h[v]);
        total_s += static_cast<std::int64_t>(h[v]) * v;
    }
    const bool exact = total_n <= (1 << 19);

    int best_t = 0;
    u128 best_num = 0, best_den = 1;
    long double best_ld = -1.0L;
    std::int64_t n0 = 0, s0 = 0;
    for (int t = 0; t < 256; ++t) {
        n0 += static_cast<std::int64_t>(h[t]);
        s0 += static_cast<std::int64_t>(h[t]) * t;
        const std::int64_t n1 = total_n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const std::int64_t d = s0 * total_n - total_s * n0;
        const u128 mag = static_cast<u128>(d < 0 ? -d : d);
        const u128 num = mag * mag;
        const u128 den = static_cast<u128>(n0) * static_cast<u128>(n1);
        if (exact) {
            if (num * best_den > best_num * den) {
                best_num = num;
                best_den = den;
                best_t = t;
            }
        } else {
            const long double v = static_cast<long double>(d) * static_cast<long double>(d) /
                                  (static_cast<long double>(n0) * static_cast<long double>(n1));
            if (v > best_ld) {
                best_ld = v;
                best_t = t;
            }
        }
    }
    return best_t;
}

BinaryImage binarize_otsu(const ChannelMatrix& ch) {
    const int t = otsu_threshold(ch);
    BinaryImage out(ch.rows(), ch.cols());
    auto src = ch.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = rounded_sample(src[i]) > t ? 1 : 0;
    return out;
}

BinaryImage sobel_edges(const BinaryImage& bw) {
    if (bw.rows() < 3 || bw.cols() < 3) throw Error(ErrorCode::TooSmall, "sobel needs at least 3x3");
    static constexpr int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    BinaryImage out(bw.rows(), bw.cols());
    for (std::size_t r = 1; r + 1 < bw.rows(); ++r) {
        for (std::size_t c = 1; c + 1 < bw.cols(); ++c) {
            int gx = 0, gy = 0;
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    const int v = bw(r + a - 1, c + b - 1) ? 1 : 0;
                    gx += kx[a][b] * v;
                    gy += kx[b][a] * v;
                }
            }
            out(r, c) = (std::abs(gx) + std::abs(gy)) > 0 ? 1 : 0;
        }
    }
    return out;
}

BinaryImage erode(const BinaryImage& bw, const StructuringElement& se) {
    BinaryImage out(bw.rows(), bw.cols());
    for (std::size_t r = 0; r < bw.rows(); ++r) {
        for (std::size_t c = 0; c < bw.cols(); ++c) {
            bool keep = true;
            for (const auto& [dr, dc] : se.offsets()) {
                const long rr = static_cast<long>(r) + dr;
                const long cc = static_cast<long>(c) + dc;
                if (!inside(rr, cc, bw) || !bw(rr, cc)) {
                    keep = false;
                    break;
                }
            }
            out(r, c) = keep ? 1 : 0;
        }
    }
    return out;
}

BinaryImage dilate(const BinaryImage& bw, const StructuringElement& se) {
    BinaryImage out(bw.rows(), bw.cols());
    for (std::size_t r = 0; r < bw.rows(); ++r) {
        for (std::size_t c = 0; c < bw.cols(); ++c) {
            if (!bw(r, c)) continue;
            for (const auto& [dr, dc] : se.offsets()) {
                const long rr = static_cast<long>(r) + dr;
                const long cc = static_cast<long>(c) + dc;
                if (inside(rr, cc, bw)) out(rr, cc) = 1;
            }
        }
    }
    return out;
}

BinaryImage morph_open(const BinaryImage& bw, const StructuringElement& se) {
    return dilate(erode(bw, se), se);
}

BinaryImage morph_skeleton(const BinaryImage& bw, const StructuringElement& se) {
    BinaryImage skeleton(bw.rows(), bw.cols());
    BinaryImage eroded = bw;
    while (count_foreground(eroded) > 0) {
        const BinaryImage opened = morph_open(eroded, se);
        auto e = eroded.values();
        auto o = opened.values();
        auto s = skeleton.values();
        for (std::size_t i = 0; i < s.size(); ++i)
            if (e[i] && !o[i]) s[i] = 1;
        eroded = erode(eroded, se);
    }
    return skeleton;
}

BinaryImage resize_binary_nearest(const BinaryImage& bw, std::size_t new_rows, std::size_t new_cols) {
    if (new_rows == 0 || new_cols == 0) throw Error(ErrorCode::InvalidArgument, "resize target must be non-empty");
    BinaryImage out(new_rows, new_cols);
    for (std::size_t i = 0; i < new_rows; ++i) {
        const std::size_t si = i * bw.rows() / new_rows;
        for (std::size_t j = 0; j < new_cols; ++j) out(i, j) = bw(si, j * bw.cols() / new_cols);
    }
    return out;
}

std::size_t count_foreground(const BinaryImage& bw) noexcept {
    return static_cast<std::size_t>(std::count_if(bw.values().begin(), bw.values().end(), [](auto v) { return v != 0; }));
}

}  // namespace cbir
