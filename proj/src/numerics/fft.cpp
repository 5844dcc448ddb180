#include <cmath>
#include <numbers>

#include "cbir/numerics.hpp"

namespace cbir {

bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

void fft_inplace(std::span<std::complex<double>> data) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) throw Error(ErrorCode::NotPowerOfTwo, "fft length " + std::to_string(n));
    if (n == 1) return;

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    // Twiddles evaluated directly rather than by recurrence to keep error at ulp level.
    std::vector<std::complex<double>> twiddle(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
        twiddle[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto u = data[start + k];
                const auto v = data[start + k + half] * twiddle[k * stride];
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
    }
}

ComplexMatrix fft2(const ChannelMatrix& ch) {
    if (!is_power_of_two(ch.rows()) || !is_power_of_two(ch.cols()))
        throw Error(ErrorCode::NotPowerOfTwo,
                    "fft2 dims " + std::to_string(ch.rows()) + "x" + std::to_string(ch.cols()));
    ComplexMatrix out(ch.rows(), ch.cols());
    for (std::size_t r = 0; r < ch.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < ch.cols(); ++c) row[c] = ch(r, c);
        fft_inplace(row);
    }
    std::vector<std::complex<double>> column(ch.rows());
    for (std::size_t c = 0; c < ch.cols(); ++c) {
        for (std::size_t r = 0; r < ch.rows(); ++r) column[r] = out(r, c);
        fft_inplace(column);
        for (std::size_t r = 0; r < ch.rows(); ++r) out(r, c) = column[r];
    }
    return out;
}

ComplexMatrix fftshift(const ComplexMatrix& cm) {
    if (cm.rows() % 2 != 0 || cm.cols() % 2 != 0) throw Error(ErrorCode::OddDims, "fftshift requires even dims");
    const std::size_t hr = cm.rows() / 2, hc = cm.cols() / 2;
    ComplexMatrix out(cm.rows(), cm.cols());
    for (std::size_t r = 0; r < cm.rows(); ++r)
        for (std::size_t c = 0; c < cm.cols(); ++c) out((r + hr) % cm.rows(), (c + hc) % cm.cols()) = cm(r, c);
    return out;
}

}  // namespace cbir
