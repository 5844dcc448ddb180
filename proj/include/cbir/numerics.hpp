#pragma once

#include <complex>
#include <span>
#include <vector>

#include "cbir/imagecore.hpp"

namespace cbir {

/// One level of 2D detail coefficients. HL holds horizontal high-pass
/// (top-right quadrant), LH vertical high-pass (bottom-left), HH diagonal.
struct DetailBands {
    ChannelMatrix hl;
    ChannelMatrix lh;
    ChannelMatrix hh;
};

/// Multi-level Haar pyramid: approx is LL at the deepest level and
/// details[0] is level 1 (the finest).
struct WaveletDecomposition {
    ChannelMatrix approx;
    std::vector<DetailBands> details;

    std::size_t levels() const noexcept { return details.size(); }
    std::size_t matrix_count() const noexcept { return 3 * details.size() + 1; }
};

struct HaarPair {
    std::vector<double> approx;
    std::vector<double> detail;
};

/// Orthonormal Haar analysis: a_i = (x_2i + x_2i+1)/sqrt2, d_i = (x_2i - x_2i+1)/sqrt2.
HaarPair haar_forward_1d(std::span<const double> signal);
std::vector<double> haar_inverse_1d(std::span<const double> approx, std::span<const double> detail);

/// Rows then columns per level; recursion continues on LL only.
WaveletDecomposition dwt2_multilevel(const ChannelMatrix& ch, std::size_t levels);
ChannelMatrix idwt2(const WaveletDecomposition& dec);

using ComplexMatrix = Matrix<std::complex<double>>;

/// In-place iterative radix-2 FFT; `data.size()` must be a power of two.
void fft_inplace(std::span<std::complex<double>> data);

/// Unnormalized forward 2D DFT (row FFTs, then column FFTs).
ComplexMatrix fft2(const ChannelMatrix& ch);
ComplexMatrix fftshift(const ComplexMatrix& cm);

bool is_power_of_two(std::size_t n) noexcept;

/// All eigenvalues of a general real square matrix (balancing, Hessenberg
/// reduction, Francis double-shift QR). Throws NoConvergence after 100*n sweeps.
std::vector<std::complex<double>> eigenvalues(const ChannelMatrix& m);

/// max |lambda| over the (possibly complex) spectrum.
double spectral_radius(const ChannelMatrix& m);

}  // namespace cbir
