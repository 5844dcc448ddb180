#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>

#include "cbir/imagecore.hpp"

namespace testing {

/// Error code thrown by `f`, or nullopt when it returns normally.
template <typename F>
std::optional<cbir::ErrorCode> code_of(F&& f) {
    try {
        f();
    } catch (const cbir::Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline cbir::ChannelMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    cbir::ChannelMatrix m(rows, cols);
    for (double& v : m.values()) v = u(rng);
    return m;
}

inline cbir::BinaryImage random_binary(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double p = 0.5) {
    std::bernoulli_distribution b(p);
    cbir::BinaryImage m(rows, cols);
    for (auto& v : m.values()) v = b(rng) ? 1 : 0;
    return m;
}

/// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("cbir-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
