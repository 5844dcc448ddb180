#include <algorithm>
#include <cmath>

#include "../binary_io.hpp"
#include "cbir/retrieval.hpp"
#include "json.hpp"

namespace cbir {

std::vector<std::uint8_t> serialize(const CorpusNormalization& n) {
    detail::ByteWriter out;
    out.magic("CBNM");
    out.u32(kNormalizationVersion);
    out.u64(n.fitted_on);
    out.f64s(n.color_min);
    out.f64s(n.color_max);
    out.f64s(n.texture_min);
    out.f64s(n.texture_max);
    return out.take();
}

CorpusNormalization deserialize_normalization(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    in.expect_magic("CBNM");
    const auto version = in.u32();
    if (version != kNormalizationVersion)
        throw Error(ErrorCode::VersionMismatch, "normalization version " + std::to_string(version));
    CorpusNormalization n;
    n.fitted_on = in.u64();
    in.f64s(n.color_min);
    in.f64s(n.color_max);
    in.f64s(n.texture_min);
    in.f64s(n.texture_max);
    in.expect_end();
    if (n.fitted_on == 0) throw Error(ErrorCode::Corrupt, "normalization fitted on zero records");
    return n;
}

namespace {

template <std::size_t N>
void fit_bounds(std::span<const std::array<double, N>> rows, std::array<double, N>& lo, std::array<double, N>& hi) {
    lo = rows.front();
    hi = rows.front();
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < N; ++i) {
            lo[i] = std::min(lo[i], r[i]);
            hi[i] = std::max(hi[i], r[i]);
        }
    }
}

template <std::size_t N>
std::array<double, N> scale(const std::array<double, N>& v, const std::array<double, N>& lo,
                            const std::array<double, N>& hi) {
    std::array<double, N> out{};
    const auto scaled = normalize(v, lo, hi);
    std::copy(scaled.begin(), scaled.end(), out.begin());
    return out;
}

}  // namespace

CorpusNormalization fit_normalization(std::span<const ColorFeatureVector> color,
                                      std::span<const TextureFeatureVector> texture) {
    if (color.empty() || texture.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to fit normalization on");
    if (color.size() != texture.size()) throw Error(ErrorCode::DimMismatch, "color and texture counts differ");
    CorpusNormalization n;
    fit_bounds(color, n.color_min, n.color_max);
    fit_bounds(texture, n.texture_min, n.texture_max);
    n.fitted_on = color.size();
    return n;
}

CorpusNormalization refit_normalization(Store& store) {
    const auto color = store.all_color_vectors();
    const auto texture = store.all_texture_vectors();
    const auto n = fit_normalization(color, texture);
    store.save_normalization(n);
    return n;
}

std::vector<double> normalize(std::span<const double> v, std::span<const double> lo, std::span<const double> hi) {
    if (v.size() != lo.size() || v.size() != hi.size())
        throw Error(ErrorCode::DimMismatch, "vector and normalization widths differ");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double span = hi[i] - lo[i];
        out[i] = span > 0.0 ? std::clamp((v[i] - lo[i]) / span, 0.0, 1.0) : 0.0;
    }
    return out;
}

ColorFeatureVector normalize(const ColorFeatureVector& v, const CorpusNormalization& n) {
    return scale(v, n.color_min, n.color_max);
}

TextureFeatureVector normalize(const TextureFeatureVector& v, const CorpusNormalization& n) {
    return scale(v, n.texture_min, n.texture_max);
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimMismatch, "vector widths differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double similarity(double distance) {
    if (distance < 0.0 || std::isnan(distance)) throw Error(ErrorCode::NegativeDistance, std::to_string(distance));
    return 1.0 / (1.0 + distance);
}

double fuse_harmonic(double color_sim, double texture_sim) {
    const double sum = color_sim + texture_sim;
    return sum > 0.0 ? 2.0 * color_sim * texture_sim / sum : 0.0;
}

QueryOutcome query(const ImageFeatures& features, Store& store, const QueryParams& params) {
    if (!store.has_weights()) throw Error(ErrorCode::UntrainedClassifier, "train the classifier first");
    if (!store.has_normalization()) throw Error(ErrorCode::NormalizationUnfitted, "run fit-norm first");
    const NetworkWeights weights = store.load_weights();
    const CorpusNormalization norm = store.load_normalization();

    QueryOutcome out;
    out.prediction = predict_category(weights, features.shape);

    const auto qc = normalize(features.color, norm);
    const auto qt = normalize(features.texture, norm);
    const auto pool = store.candidates(params.gated ? std::optional<int>(out.prediction.category) : std::nullopt);
    for (const auto& c : pool) {
        if (params.exclude.count(c.id)) continue;
        ++out.comparisons;
        QueryResult r;
        r.image_id = c.id;
        r.color_sim = similarity(euclidean(qc, normalize(c.color, norm)));
        r.texture_sim = similarity(euclidean(qt, normalize(c.texture, norm)));
        r.score = fuse_harmonic(r.color_sim, r.texture_sim);
        if (r.score >= params.threshold) out.results.push_back(r);
    }
    std::sort(out.results.begin(), out.results.end(), [](const QueryResult& a, const QueryResult& b) {
        return a.score > b.score || (a.score == b.score && a.image_id < b.image_id);
    });
    if (out.results.size() > params.top_k) out.results.resize(params.top_k);
    for (std::size_t i = 0; i < out.results.size(); ++i) out.results[i].rank = i + 1;

    nlohmann::json recorded = {{"top_k", params.top_k}, {"threshold", params.threshold}, {"gated", params.gated}};
    out.query_id = store.add_query({0, out.prediction.category, now_ms(), recorded.dump()});
    return out;
}

QueryOutcome query(const RasterImage& image, Store& store, const QueryParams& params) {
    return query(extract_features(image), store, params);
}

CategoryState next_category_state(const CategoryState& state, int query_category, Polarity polarity,
                                  const Probabilities& enroll_probs) {
    CategoryState next = state;
    if (polarity == Polarity::Positive) {
        next.neg_counts.erase(query_category);
        return next;
    }
    if (++next.neg_counts[query_category] < kVetoStrikes) return next;

    next.vetoed.insert(query_category);
    if (next.category != query_category) return next;

    int best = kUncategorized;
    for (int c = 0; c < static_cast<int>(kCategoryCount); ++c) {
        if (next.vetoed.count(c)) continue;
        if (best == kUncategorized || enroll_probs[c] > enroll_probs[best]) best = c;
    }
    next.category = best;
    return next;
}

FeedbackOutcome apply_feedback(const FeedbackEvent& ev, Store& store) {
    FeedbackEvent stamped = ev;
    if (stamped.timestamp_ms == 0) stamped.timestamp_ms = now_ms();
    auto [before, after] = store.record_feedback(stamped, next_category_state);
    FeedbackOutcome out;
    out.reassigned = before.category != after.category;
    if (out.reassigned) out.new_category = after.category;
    out.state = std::move(after);
    return out;
}

}  // namespace cbir
