#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "cbir/classifier.hpp"
#include "cbir/features.hpp"
#include "cbir/normalization.hpp"
#include "cbir/store.hpp"

namespace cbir {

CorpusNormalization fit_normalization(std::span<const ColorFeatureVector> color,
                                      std::span<const TextureFeatureVector> texture);

/// Fits over every enrolled record and persists the result.
CorpusNormalization refit_normalization(Store& store);

/// (v - min) / (max - min) clamped to [0,1]; a degenerate dimension maps to 0.
std::vector<double> normalize(std::span<const double> v, std::span<const double> lo, std::span<const double> hi);
ColorFeatureVector normalize(const ColorFeatureVector& v, const CorpusNormalization& n);
TextureFeatureVector normalize(const TextureFeatureVector& v, const CorpusNormalization& n);

double euclidean(std::span<const double> a, std::span<const double> b);

/// 1 / (1 + d)
double similarity(double distance);

/// 2ab / (a + b), 0 when both are 0.
double fuse_harmonic(double color_sim, double texture_sim);

struct QueryParams {
    std::size_t top_k = 10;
    double threshold = 0.5;
    /// When false every record is compared regardless of category.
    bool gated = true;
    /// Records never compared for this query.
    std::set<ImageId> exclude;
};

struct QueryResult {
    ImageId image_id = 0;
    double color_sim = 0;
    double texture_sim = 0;
    double score = 0;
    std::size_t rank = 0;
};

struct QueryOutcome {
    QueryId query_id = 0;
    Prediction prediction;
    std::vector<QueryResult> results;
    /// Number of records whose distances were computed.
    std::size_t comparisons = 0;
};

/// Classifies the query's shape, scores every record of the predicted
/// category by fused color/texture similarity, keeps scores >= threshold,
/// sorts (score desc, id asc), truncates to top_k and records the query.
QueryOutcome query(const ImageFeatures& features, Store& store, const QueryParams& params = {});
QueryOutcome query(const RasterImage& image, Store& store, const QueryParams& params = {});

inline constexpr int kVetoStrikes = 3;

/// The relevance-feedback rule, pure. Positive clears the negative marks for
/// `query_category`; negative adds one, and the third strike vetoes that
/// category and, if the image is currently in it, moves the image to the
/// most probable non-vetoed category of its enrollment distribution
/// (uncategorized if none remain).
CategoryState next_category_state(const CategoryState& state, int query_category, Polarity polarity,
                                  const Probabilities& enroll_probs);

struct FeedbackOutcome {
    bool reassigned = false;
    std::optional<int> new_category;
    CategoryState state;
};

FeedbackOutcome apply_feedback(const FeedbackEvent& ev, Store& store);

}  // namespace cbir
