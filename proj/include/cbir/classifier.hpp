#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbir/imagecore.hpp"
#include "cbir/shape_pipeline.hpp"

namespace cbir {

inline constexpr std::size_t kCategoryCount = 9;
inline constexpr int kUncategorized = -1;

/// Fixed category list; the code is the index.
inline constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "boats", "animals", "cartoon", "automobiles", "human", "trees", "buildings", "computers", "trains"};

std::string_view category_name(int code);

/// Case-insensitive lookup of a category name; nullopt if unknown.
std::optional<int> category_from_name(std::string_view name);

using Probabilities = std::array<double, kCategoryCount>;

/// Two weight layers: 30 inputs -> sigmoid hidden layer -> softmax over 9.
struct NetworkWeights {
    std::size_t hidden = 0;
    std::uint64_t seed = 0;
    Matrix<double> w1;  // kShapeFeatures x hidden
    std::vector<double> b1;
    Matrix<double> w2;  // hidden x kCategoryCount
    std::vector<double> b2;

    bool operator==(const NetworkWeights&) const = default;
};

/// Same layout as the weights; used for gradients.
using Gradients = NetworkWeights;

inline constexpr std::size_t kDefaultHidden = 24;

/// Xavier-uniform weights from a seeded mt19937_64, zero biases.
NetworkWeights init_network(std::uint64_t seed, std::size_t hidden = kDefaultHidden);

std::array<double, kCategoryCount> logits(const NetworkWeights& w, std::span<const double> x);
Probabilities forward(const NetworkWeights& w, std::span<const double> x);

struct Prediction {
    int category = 0;
    Probabilities probs{};
};

/// argmax of forward(); ties go to the smallest code.
Prediction predict_category(const NetworkWeights& w, std::span<const double> x);

struct LabeledDescriptor {
    ShapeDescriptor features{};
    int category = 0;
};

struct TrainingSet {
    std::vector<LabeledDescriptor> samples;
    /// Categories that must each have at least one sample. Defaults to all nine.
    std::vector<int> required_categories = {0, 1, 2, 3, 4, 5, 6, 7, 8};
};

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t batch_size = 16;
    std::size_t max_epochs = 500;
    double target_loss = 0.01;
};

struct TrainResult {
    NetworkWeights weights;
    std::vector<double> epoch_losses;
};

/// Mini-batch SGD on cross-entropy. Shuffling uses a PRNG seeded from
/// `w.seed`, so identical inputs give bitwise-identical weights. Stops after
/// max_epochs or once the full-set mean loss drops below target_loss.
TrainResult train(NetworkWeights w, const TrainingSet& data, const TrainConfig& cfg = {});

double cross_entropy(const NetworkWeights& w, std::span<const double> x, int label);
double mean_loss(const NetworkWeights& w, std::span<const LabeledDescriptor> samples);

/// Loss of one sample and the analytic gradient of every parameter.
double loss_and_gradient(const NetworkWeights& w, std::span<const double> x, int label, Gradients& grad);

double accuracy(const NetworkWeights& w, std::span<const LabeledDescriptor> samples);

/// Max over all parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-4),
/// numeric by central differences with step 1e-5. `tamper` may alter the
/// analytic gradient before comparison (used to prove the check bites).
double gradient_check(const NetworkWeights& w, std::span<const double> x, int label,
                      const std::function<void(Gradients&)>& tamper = {});

/// Little-endian: "CBNW", u32 version, u32 hidden, u64 seed, then w1, b1, w2, b2 as f64.
std::vector<std::uint8_t> serialize(const NetworkWeights& w);
NetworkWeights deserialize_weights(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kWeightsVersion = 1;

}  // namespace cbir
