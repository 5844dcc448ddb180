#include <cmath>

#include "cbir/color_features.hpp"

namespace cbir {

Histogram256 channel_histogram(const ChannelMatrix& ch) {
    Histogram256 h;
    for (double v : ch.values()) {
        const double r = std::round(v);
        if (!(r >= 0.0 && r <= 255.0)) throw Error(ErrorCode::OutOfRange, "channel value " + std::to_string(v));
        ++h.counts[static_cast<std::size_t>(r)];
    }
    h.total = ch.size();
    return h;
}

namespace {

// Smallest intensity v with CDF(v) >= percent/100, compared in integers.
int percentile(const Histogram256& h, std::uint64_t percent) {
    std::uint64_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += h.counts[v];
        if (cum * 100 >= percent * h.total) return v;
    }
    return 255;
}

}  // namespace

ChannelStats descriptive_stats(const Histogram256& h) {
    if (h.total == 0) throw Error(ErrorCode::EmptyHistogram, "histogram has no samples");
    const double n = static_cast<double>(h.total);

    ChannelStats s;
    int lo = -1, hi = -1, mode = 0;
    double sum = 0.0;
    for (int v = 0; v < 256; ++v) {
        const auto c = h.counts[v];
        if (c == 0) continue;
        if (lo < 0) lo = v;
        hi = v;
        if (c > h.counts[mode]) mode = v;
        sum += static_cast<double>(c) * v;
    }
    s.mean = sum / n;

    double m2 = 0.0, m3 = 0.0;
    for (int v = lo; v <= hi; ++v) {
        const double c = static_cast<double>(h.counts[v]);
        if (c == 0) continue;
        const double d = v - s.mean;
        m2 += c * d * d;
        m3 += c * d * d * d;
    }
    m2 /= n;
    m3 /= n;

    s.mode = mode;
    s.q1 = percentile(h, 25);
    s.median = percentile(h, 50);
    s.p60 = percentile(h, 60);
    s.q3 = percentile(h, 75);
    s.stddev = std::sqrt(m2);
    s.iqr = s.q3 - s.q1;
    s.range = hi - lo;
    s.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return s;
}

ColorFeatureVector color_vector(const RasterImage& img) {
    const Channels ch = split_channels(cap_size(img));
    ColorFeatureVector out{};
    std::size_t k = 0;
    for (const ChannelMatrix* m : {&ch.red, &ch.green, &ch.blue})
        for (double v : descriptive_stats(channel_histogram(*m)).as_array()) out[k++] = v;
    return out;
}

}  // namespace cbir
