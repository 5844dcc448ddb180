#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "../binary_io.hpp"
#include "cbir/classifier.hpp"

namespace cbir {

std::string_view category_name(int code) {
    if (code == kUncategorized) return "uncategorized";
    if (code < 0 || code >= static_cast<int>(kCategoryCount))
        throw Error(ErrorCode::InvalidArgument, "category code " + std::to_string(code));
    return kCategoryNames[static_cast<std::size_t>(code)];
}

std::optional<int> category_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
        const auto& candidate = kCategoryNames[i];
        if (candidate.size() == name.size() &&
            std::equal(name.begin(), name.end(), candidate.begin(),
                       [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) == b; }))
            return static_cast<int>(i);
    }
    return std::nullopt;
}

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Fisher-Yates with the engine's raw output so the order is identical across
// standard library implementations.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Activations {
    std::vector<double> hidden;
    std::array<double, kCategoryCount> z{};
};

Activations run(const NetworkWeights& w, std::span<const double> x) {
    if (x.size() != w.w1.rows()) throw Error(ErrorCode::DimMismatch, "input width does not match network");
    Activations a;
    a.hidden.assign(w.b1.begin(), w.b1.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto row = w.w1.row(i);
        for (std::size_t j = 0; j < w.hidden; ++j) a.hidden[j] += x[i] * row[j];
    }
    for (double& h : a.hidden) h = sigmoid(h);
    std::copy(w.b2.begin(), w.b2.end(), a.z.begin());
    for (std::size_t j = 0; j < w.hidden; ++j) {
        const auto row = w.w2.row(j);
        for (std::size_t k = 0; k < kCategoryCount; ++k) a.z[k] += a.hidden[j] * row[k];
    }
    return a;
}

double log_sum_exp(const std::array<double, kCategoryCount>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

Probabilities softmax(const std::array<double, kCategoryCount>& z) {
    const double lse = log_sum_exp(z);
    Probabilities p{};
    for (std::size_t k = 0; k < kCategoryCount; ++k) p[k] = std::exp(z[k] - lse);
    return p;
}

void check_label(int label) {
    if (label < 0 || label >= static_cast<int>(kCategoryCount))
        throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(label));
}

Gradients zeros_like(const NetworkWeights& w) {
    Gradients g;
    g.hidden = w.hidden;
    g.seed = w.seed;
    g.w1 = Matrix<double>(w.w1.rows(), w.w1.cols());
    g.b1.assign(w.b1.size(), 0.0);
    g.w2 = Matrix<double>(w.w2.rows(), w.w2.cols());
    g.b2.assign(w.b2.size(), 0.0);
    return g;
}

template <typename Net, typename F>
void for_each_param(Net& w, F&& f) {
    for (auto& v : w.w1.values()) f(v);
    for (auto& v : w.b1) f(v);
    for (auto& v : w.w2.values()) f(v);
    for (auto& v : w.b2) f(v);
}

}  // namespace

NetworkWeights init_network(std::uint64_t seed, std::size_t hidden) {
    if (hidden == 0) throw Error(ErrorCode::InvalidArgument, "hidden width must be >= 1");
    std::mt19937_64 rng(seed);
    NetworkWeights w;
    w.hidden = hidden;
    w.seed = seed;
    const auto fill = [&](Matrix<double>& m, std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        m = Matrix<double>(fan_in, fan_out);
        for (double& v : m.values()) v = (2.0 * unit_uniform(rng) - 1.0) * limit;
    };
    fill(w.w1, kShapeFeatures, hidden);
    fill(w.w2, hidden, kCategoryCount);
    w.b1.assign(hidden, 0.0);
    w.b2.assign(kCategoryCount, 0.0);
    return w;
}

std::array<double, kCategoryCount> logits(const NetworkWeights& w, std::span<const double> x) { return run(w, x).z; }

Probabilities forward(const NetworkWeights& w, std::span<const double> x) { return softmax(run(w, x).z); }

Prediction predict_category(const NetworkWeights& w, std::span<const double> x) {
    Prediction p;
    p.probs = forward(w, x);
    // max_element returns the first maximum, i.e. the smallest code on ties.
    p.category = static_cast<int>(std::max_element(p.probs.begin(), p.probs.end()) - p.probs.begin());
    return p;
}

double cross_entropy(const NetworkWeights& w, std::span<const double> x, int label) {
    check_label(label);
    const auto z = run(w, x).z;
    return log_sum_exp(z) - z[static_cast<std::size_t>(label)];
}

double mean_loss(const NetworkWeights& w, std::span<const LabeledDescriptor> samples) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    for (const auto& s : samples) total += cross_entropy(w, s.features, s.category);
    return total / static_cast<double>(samples.size());
}

double accuracy(const NetworkWeights& w, std::span<const LabeledDescriptor> samples) {
    if (samples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : samples)
        if (predict_category(w, s.features).category == s.category) ++hits;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double loss_and_gradient(const NetworkWeights& w, std::span<const double> x, int label, Gradients& grad) {
    check_label(label);
    const Activations a = run(w, x);
    const Probabilities y = softmax(a.z);

    std::array<double, kCategoryCount> dz{};
    for (std::size_t k = 0; k < kCategoryCount; ++k) dz[k] = y[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);

    std::vector<double> dhidden(w.hidden, 0.0);
    for (std::size_t j = 0; j < w.hidden; ++j) {
        const auto wrow = w.w2.row(j);
        auto grow = grad.w2.row(j);
        double back = 0.0;
        for (std::size_t k = 0; k < kCategoryCount; ++k) {
            grow[k] += a.hidden[j] * dz[k];
            back += wrow[k] * dz[k];
        }
        dhidden[j] = back * a.hidden[j] * (1.0 - a.hidden[j]);
    }
    for (std::size_t k = 0; k < kCategoryCount; ++k) grad.b2[k] += dz[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto grow = grad.w1.row(i);
        for (std::size_t j = 0; j < w.hidden; ++j) grow[j] += x[i] * dhidden[j];
    }
    for (std::size_t j = 0; j < w.hidden; ++j) grad.b1[j] += dhidden[j];

    return log_sum_exp(a.z) - a.z[static_cast<std::size_t>(label)];
}

TrainResult train(NetworkWeights w, const TrainingSet& data, const TrainConfig& cfg) {
    for (int c : data.required_categories) {
        const bool present = std::any_of(data.samples.begin(), data.samples.end(),
                                         [c](const LabeledDescriptor& s) { return s.category == c; });
        if (!present) throw Error(ErrorCode::MissingCategory, "no training samples for " + std::string(category_name(c)));
    }
    if (data.samples.empty()) throw Error(ErrorCode::MissingCategory, "training set is empty");
    for (const auto& s : data.samples) check_label(s.category);
    if (cfg.batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");

    // SGD runs on per-feature standardized inputs: the raw descriptors share
    // a large common offset and differ by a few hundredths, which leaves plain
    // SGD stuck near chance. The affine map is folded into w1/b1 on both
    // ends, so the returned weights act on raw descriptors.
    const std::size_t n = data.samples.size();
    std::array<double, kShapeFeatures> mu{}, sigma{};
    for (const auto& s : data.samples)
        for (std::size_t i = 0; i < kShapeFeatures; ++i) mu[i] += s.features[i] / static_cast<double>(n);
    for (const auto& s : data.samples)
        for (std::size_t i = 0; i < kShapeFeatures; ++i) {
            const double d = s.features[i] - mu[i];
            sigma[i] += d * d / static_cast<double>(n);
        }
    for (auto& v : sigma) v = v > 1e-24 ? std::sqrt(v) : 1.0;

    std::vector<LabeledDescriptor> z = data.samples;
    for (auto& s : z)
        for (std::size_t i = 0; i < kShapeFeatures; ++i) s.features[i] = (s.features[i] - mu[i]) / sigma[i];
    for (std::size_t j = 0; j < w.hidden; ++j)
        for (std::size_t i = 0; i < kShapeFeatures; ++i) {
            w.b1[j] += mu[i] * w.w1(i, j);
            w.w1(i, j) *= sigma[i];
        }

    std::mt19937_64 rng(w.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Gradients g = zeros_like(w);
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = z[order[i]];
                loss_and_gradient(w, s.features, s.category, g);
            }
            const double step = cfg.learning_rate / static_cast<double>(end - start);
            std::vector<double*> params;
            for_each_param(w, [&](double& v) { params.push_back(&v); });
            std::size_t idx = 0;
            for_each_param(g, [&](double& gv) { *params[idx++] -= step * gv; });
        }
        const double loss = mean_loss(w, z);
        result.epoch_losses.push_back(loss);
        if (loss < cfg.target_loss) break;
    }
    for (std::size_t j = 0; j < w.hidden; ++j)
        for (std::size_t i = 0; i < kShapeFeatures; ++i) {
            w.w1(i, j) /= sigma[i];
            w.b1[j] -= mu[i] * w.w1(i, j);
        }
    result.weights = std::move(w);
    return result;
}

double gradient_check(const NetworkWeights& w, std::span<const double> x, int label,
                      const std::function<void(Gradients&)>& tamper) {
    constexpr double step = 1e-5;
    constexpr double floor = 1e-4;
    Gradients analytic = zeros_like(w);
    loss_and_gradient(w, x, label, analytic);
    if (tamper) tamper(analytic);

    std::vector<double> expected;
    for_each_param(analytic, [&](double& v) { expected.push_back(v); });

    NetworkWeights probe = w;
    std::vector<double*> params;
    for_each_param(probe, [&](double& v) { params.push_back(&v); });

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = *params[i];
        *params[i] = saved + step;
        const double up = cross_entropy(probe, x, label);
        *params[i] = saved - step;
        const double down = cross_entropy(probe, x, label);
        *params[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(expected[i]), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(expected[i] - numeric) / denom);
    }
    return worst;
}

std::vector<std::uint8_t> serialize(const NetworkWeights& w) {
    detail::ByteWriter out;
    out.magic("CBNW");
    out.u32(kWeightsVersion);
    out.u32(static_cast<std::uint32_t>(w.hidden));
    out.u64(w.seed);
    out.f64s(w.w1.values());
    out.f64s(w.b1);
    out.f64s(w.w2.values());
    out.f64s(w.b2);
    return out.take();
}

NetworkWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
    detail::ByteReader in(bytes);
    in.expect_magic("CBNW");
    const auto version = in.u32();
    if (version != kWeightsVersion)
        throw Error(ErrorCode::VersionMismatch, "weights version " + std::to_string(version));
    NetworkWeights w;
    w.hidden = in.u32();
    if (w.hidden == 0 || w.hidden > (1u << 16)) throw Error(ErrorCode::Corrupt, "implausible hidden width");
    w.seed = in.u64();
    w.w1 = Matrix<double>(kShapeFeatures, w.hidden);
    w.b1.assign(w.hidden, 0.0);
    w.w2 = Matrix<double>(w.hidden, kCategoryCount);
    w.b2.assign(kCategoryCount, 0.0);
    in.f64s(w.w1.values());
    in.f64s(w.b1);
    in.f64s(w.w2.values());
    in.f64s(w.b2);
    in.expect_end();
    for_each_param(w, [](double& v) {
        if (!std::isfinite(v)) throw Error(ErrorCode::Corrupt, "non-finite weight");
    });
    return w;
}

}  // namespace cbir
