#pragma once

#include <array>
#include <cstdint>

#include "cbir/imagecore.hpp"

namespace cbir {

struct Histogram256 {
    std::array<std::uint64_t, 256> counts{};
    std::uint64_t total = 0;
};

/// Per-channel statistics in feature order.
struct ChannelStats {
    double mean = 0;
    double median = 0;
    double mode = 0;
    double q1 = 0;
    double q3 = 0;
    double p60 = 0;
    double stddev = 0;
    double iqr = 0;
    double range = 0;
    double skewness = 0;

    std::array<double, 10> as_array() const {
        return {mean, median, mode, q1, q3, p60, stddev, iqr, range, skewness};
    }
};

inline constexpr std::size_t kColorFeatures = 30;
using ColorFeatureVector = std::array<double, kColorFeatures>;

/// Counts of rounded values; anything rounding outside [0,255] is OutOfRange.
Histogram256 channel_histogram(const ChannelMatrix& ch);

/// Population statistics of the histogram. Percentiles are the smallest
/// intensity whose CDF reaches p; mode ties go to the smallest intensity;
/// skewness is m3 / m2^1.5 and 0 for a degenerate population.
ChannelStats descriptive_stats(const Histogram256& h);

/// R stats, then G, then B. The image is size-capped but not padded.
ColorFeatureVector color_vector(const RasterImage& img);

}  // namespace cbir
