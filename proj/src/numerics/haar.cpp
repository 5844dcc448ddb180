#include <cmath>
#include <numbers>

#include "cbir/numerics.hpp"

namespace cbir {

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// One analysis level on the top-left `side` x `side` window, in place:
// rows first, then columns, leaving LL | HL over LH | HH.
void analyze_level(ChannelMatrix& m, std::size_t side) {
    const std::size_t half = side / 2;
    std::vector<double> tmp(side);
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t i = 0; i < half; ++i) {
            const double a = m(r, 2 * i), b = m(r, 2 * i + 1);
            tmp[i] = (a + b) * kInvSqrt2;
            tmp[half + i] = (a - b) * kInvSqrt2;
        }
        for (std::size_t c = 0; c < side; ++c) m(r, c) = tmp[c];
    }
    for (std::size_t c = 0; c < side; ++c) {
        for (std::size_t i = 0; i < half; ++i) {
            const double a = m(2 * i, c), b = m(2 * i + 1, c);
            tmp[i] = (a + b) * kInvSqrt2;
            tmp[half + i] = (a - b) * kInvSqrt2;
        }
        for (std::size_t r = 0; r < side; ++r) m(r, c) = tmp[r];
    }
}

void synthesize_level(ChannelMatrix& m, std::size_t side) {
    const std::size_t half = side / 2;
    std::vector<double> tmp(side);
    for (std::size_t c = 0; c < side; ++c) {
        for (std::size_t i = 0; i < half; ++i) {
            const double a = m(i, c), d = m(half + i, c);
            tmp[2 * i] = (a + d) * kInvSqrt2;
            tmp[2 * i + 1] = (a - d) * kInvSqrt2;
        }
        for (std::size_t r = 0; r < side; ++r) m(r, c) = tmp[r];
    }
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t i = 0; i < half; ++i) {
            const double a = m(r, i), d = m(r, half + i);
            tmp[2 * i] = (a + d) * kInvSqrt2;
            tmp[2 * i + 1] = (a - d) * kInvSqrt2;
        }
        for (std::size_t c = 0; c < side; ++c) m(r, c) = tmp[c];
    }
}

ChannelMatrix block(const ChannelMatrix& m, std::size_t r0, std::size_t c0, std::size_t side) {
    ChannelMatrix out(side, side);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) out(r, c) = m(r0 + r, c0 + c);
    return out;
}

void put_block(ChannelMatrix& m, const ChannelMatrix& b, std::size_t r0, std::size_t c0) {
    for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) m(r0 + r, c0 + c) = b(r, c);
}

bool is_square(const ChannelMatrix& m, std::size_t side) { return m.rows() == side && m.cols() == side; }

}  // namespace

HaarPair haar_forward_1d(std::span<const double> signal) {
    if (signal.size() < 2 || signal.size() % 2 != 0)
        throw Error(ErrorCode::OddLength, "haar input length must be even and >= 2");
    const std::size_t half = signal.size() / 2;
    HaarPair out{std::vector<double>(half), std::vector<double>(half)};
    for (std::size_t i = 0; i < half; ++i) {
        out.approx[i] = (signal[2 * i] + signal[2 * i + 1]) * kInvSqrt2;
        out.detail[i] = (signal[2 * i] - signal[2 * i + 1]) * kInvSqrt2;
    }
    return out;
}

std::vector<double> haar_inverse_1d(std::span<const double> approx, std::span<const double> detail) {
    if (approx.size() != detail.size()) throw Error(ErrorCode::LengthMismatch, "approx and detail lengths differ");
    std::vector<double> out(approx.size() * 2);
    for (std::size_t i = 0; i < approx.size(); ++i) {
        out[2 * i] = (approx[i] + detail[i]) * kInvSqrt2;
        out[2 * i + 1] = (approx[i] - detail[i]) * kInvSqrt2;
    }
    return out;
}

WaveletDecomposition dwt2_multilevel(const ChannelMatrix& ch, std::size_t levels) {
    if (levels == 0) throw Error(ErrorCode::InvalidArgument, "at least one level is required");
    if (ch.rows() != ch.cols()) throw Error(ErrorCode::NotSquare, "dwt2 input must be square");
    const std::size_t side = ch.rows();
    if (side == 0 || side % (std::size_t{1} << levels) != 0)
        throw Error(ErrorCode::NotDivisible, "side " + std::to_string(side) + " not divisible by 2^" +
                                                 std::to_string(levels));
    ChannelMatrix work = ch;
    WaveletDecomposition dec;
    std::size_t s = side;
    for (std::size_t level = 0; level < levels; ++level, s /= 2) {
        analyze_level(work, s);
        const std::size_t h = s / 2;
        dec.details.push_back({block(work, 0, h, h), block(work, h, 0, h), block(work, h, h, h)});
    }
    dec.approx = block(work, 0, 0, s);
    return dec;
}

ChannelMatrix idwt2(const WaveletDecomposition& dec) {
    const std::size_t levels = dec.levels();
    const std::size_t a = dec.approx.rows();
    if (levels == 0 || a == 0 || !is_square(dec.approx, a))
        throw Error(ErrorCode::MalformedPyramid, "approximation must be a non-empty square");
    for (std::size_t l = 0; l < levels; ++l) {
        const std::size_t expect = a << (levels - 1 - l);
        const auto& d = dec.details[l];
        if (!is_square(d.hl, expect) || !is_square(d.lh, expect) || !is_square(d.hh, expect))
            throw Error(ErrorCode::MalformedPyramid, "detail band size mismatch at level " + std::to_string(l + 1));
    }
    const std::size_t side = a << levels;
    ChannelMatrix work(side, side);
    put_block(work, dec.approx, 0, 0);
    for (std::size_t l = levels; l-- > 0;) {
        const auto& d = dec.details[l];
        const std::size_t h = d.hl.rows();
        put_block(work, d.hl, 0, h);
        put_block(work, d.lh, h, 0);
        put_block(work, d.hh, h, h);
        synthesize_level(work, 2 * h);
    }
    return work;
}

}  // namespace cbir
