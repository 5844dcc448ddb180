#include "cbir/texture_features.hpp"
#include "cbir/numerics.hpp"

namespace cbir {

std::array<double, kBandsPerChannel> channel_texture(const ChannelMatrix& ch) {
    const auto dec = dwt2_multilevel(pad_square_block(ch, std::size_t{1} << kTextureLevels), kTextureLevels);
    std::array<double, kBandsPerChannel> out{};
    std::size_t k = 0;
    const auto radius = [&](const ChannelMatrix& band) {
        try {
            out[k] = spectral_radius(band);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoConvergence) throw;
            throw Error(ErrorCode::FeatureExtractionFailure,
                        "sub-band " + std::to_string(k) + " did not converge: " + e.what());
        }
        ++k;
    };
    radius(dec.approx);
    for (const auto& level : dec.details) {
        radius(level.hl);
        radius(level.lh);
        radius(level.hh);
    }
    return out;
}

TextureFeatureVector texture_vector(const RasterImage& img) {
    const Channels ch = split_channels(cap_size(img));
    TextureFeatureVector out{};
    std::size_t k = 0;
    for (const ChannelMatrix* m : {&ch.red, &ch.green, &ch.blue})
        for (double v : channel_texture(*m)) out[k++] = v;
    return out;
}

}  // namespace cbir
