#include <cmath>
#include <map>
#include <numeric>

#include "cbir/classifier.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cbir;
using testing::code_of;

namespace {

ShapeDescriptor random_descriptor(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ShapeDescriptor d;
    for (double& v : d) v = u(rng);
    return d;
}

// Two well separated Gaussian blobs labeled `a` and `b`.
TrainingSet two_clusters(int a, int b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.03);
    TrainingSet set;
    set.required_categories = {a, b};
    for (int i = 0; i < 40; ++i) {
        ShapeDescriptor d;
        const double center = i % 2 ? 0.8 : 0.2;
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = center + (k % 3 == 0 ? 0.1 : 0.0) + noise(rng);
        set.samples.push_back({d, i % 2 ? b : a});
    }
    return set;
}

double nearest_centroid_accuracy(const TrainingSet& set) {
    std::map<int, std::pair<ShapeDescriptor, int>> centroids;
    for (const auto& s : set.samples) {
        auto& [sum, n] = centroids[s.category];
        for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += s.features[k];
        ++n;
    }
    std::size_t hits = 0;
    for (const auto& s : set.samples) {
        int best = -1;
        double best_d = 1e300;
        for (const auto& [c, acc] : centroids) {
            double d = 0;
            for (std::size_t k = 0; k < s.features.size(); ++k) {
                const double m = acc.first[k] / acc.second;
                d += (s.features[k] - m) * (s.features[k] - m);
            }
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        hits += best == s.category;
    }
    return static_cast<double>(hits) / static_cast<double>(set.samples.size());
}

}  // namespace

TEST_CASE("category names") {
    CHECK(kCategoryNames.size() == 9);
    CHECK(category_name(0) == "boats");
    CHECK(category_name(8) == "trains");
    CHECK(category_name(kUncategorized) == "uncategorized");
    CHECK(category_from_name("Automobiles") == 3);
    CHECK(category_from_name("HUMAN") == 4);
    CHECK(!category_from_name("planes"));
    CHECK(code_of([] { category_name(9); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("initialization") {
    const auto a = init_network(1);
    CHECK(a == init_network(1));
    CHECK(!(a == init_network(2)));
    CHECK(a.w1.rows() == 30);
    CHECK(a.w1.cols() == 24);
    CHECK(a.w2.rows() == 24);
    CHECK(a.w2.cols() == 9);
    const double l1 = std::sqrt(6.0 / 54.0), l2 = std::sqrt(6.0 / 33.0);
    for (double v : a.w1.values()) CHECK(std::abs(v) <= l1);
    for (double v : a.w2.values()) CHECK(std::abs(v) <= l2);
    for (double v : a.b1) CHECK(v == 0.0);
    for (double v : a.b2) CHECK(v == 0.0);
    CHECK(init_network(5, 3).w1.cols() == 3);
    CHECK(code_of([] { init_network(1, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("forward is a distribution") {
    std::mt19937_64 rng(3);
    const auto w = init_network(9);
    for (int i = 0; i < 50; ++i) {
        const auto p = forward(w, random_descriptor(rng));
        CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        for (double v : p) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }

    NetworkWeights zero = init_network(1);
    for (double& v : zero.w1.values()) v = 0;
    for (double& v : zero.w2.values()) v = 0;
    const auto uniform = predict_category(zero, random_descriptor(rng));
    for (double v : uniform.probs) CHECK(v == doctest::Approx(1.0 / 9.0));
    CHECK(uniform.category == 0);

    const auto x = random_descriptor(rng);
    NetworkWeights shifted = w;
    for (double& b : shifted.b2) b += 3.7;
    const auto p0 = predict_category(w, x), p1 = predict_category(shifted, x);
    CHECK(p0.category == p1.category);
    for (std::size_t k = 0; k < 9; ++k) CHECK(p0.probs[k] == doctest::Approx(p1.probs[k]).epsilon(1e-12));
    CHECK(forward(w, x) == forward(w, x));
}

TEST_CASE("training on separable clusters") {
    const auto set = two_clusters(2, 6, 11);
    REQUIRE(nearest_centroid_accuracy(set) == 1.0);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    const auto r = train(init_network(4), set, cfg);
    CHECK(r.epoch_losses.size() <= 500);
    CHECK(accuracy(r.weights, set.samples) == 1.0);
    const auto& l = r.epoch_losses;
    REQUIRE(l.size() >= 10);
    for (std::size_t i = l.size() - 9; i < l.size(); ++i) CHECK(l[i] <= l[i - 1] + 1e-6);
    // The returned weights act on raw descriptors: their loss is the last recorded one.
    CHECK(mean_loss(r.weights, set.samples) == doctest::Approx(l.back()).epsilon(1e-9));
}

TEST_CASE("training is deterministic and validates its input") {
    const auto set = two_clusters(0, 1, 5);
    TrainConfig cfg;
    cfg.max_epochs = 40;
    cfg.target_loss = 0;
    const auto a = train(init_network(8), set, cfg);
    const auto b = train(init_network(8), set, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(a.epoch_losses.size() == 40);

    TrainingSet all_nine = set;
    all_nine.required_categories = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    CHECK(code_of([&] { train(init_network(1), all_nine); }) == ErrorCode::MissingCategory);
    CHECK(code_of([] { train(init_network(1), TrainingSet{{}, {}}); }) == ErrorCode::MissingCategory);
    TrainConfig zero_batch;
    zero_batch.batch_size = 0;
    CHECK(code_of([&] { train(init_network(1), set, zero_batch); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("analytic gradient matches finite differences") {
    std::mt19937_64 rng(77);
    double worst = 0, worst_oracle = 0;
    for (int i = 0; i < 100; ++i) {
        const auto w = init_network(1000 + i, 4 + i % 20);
        const auto x = random_descriptor(rng);
        worst = std::max(worst, gradient_check(w, x, i % 9));
        worst_oracle = std::max(worst_oracle, testing::finite_difference_error(w, x, i % 9));
    }
    CHECK(worst < 1e-5);
    CHECK(worst_oracle < 1e-5);

    const auto w = init_network(3);
    const auto x = random_descriptor(rng);
    const double tampered = gradient_check(w, x, 4, [](Gradients& g) {
        for (double& v : g.w2.values()) v *= 1.5;
    });
    CHECK(tampered > 1e-2);

    // A saturated, correctly classified sample: loss ~0, gradients ~0.
    NetworkWeights sat = w;
    sat.b2[4] = 40.0;
    const double e = gradient_check(sat, x, 4);
    CHECK(std::isfinite(e));
    CHECK(e < 1e-3);
}

TEST_CASE("weights serialization") {
    const auto w = train(init_network(6, 7), two_clusters(3, 5, 2), {0.1, 8, 20, 0}).weights;
    const auto bytes = serialize(w);
    CHECK(bytes.size() == 4 + 4 + 4 + 8 + 8 * (30 * 7 + 7 + 7 * 9 + 9));
    CHECK(deserialize_weights(bytes) == w);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK(code_of([&] { deserialize_weights(truncated); }) == ErrorCode::Corrupt);
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { deserialize_weights(bad_magic); }) == ErrorCode::Corrupt);
    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK(code_of([&] { deserialize_weights(bad_version); }) == ErrorCode::VersionMismatch);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(code_of([&] { deserialize_weights(trailing); }) == ErrorCode::Corrupt);
}
