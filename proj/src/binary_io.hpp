#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cbir/error.hpp"

namespace cbir::detail {

// Little-endian writer for the versioned binary blobs.
class ByteWriter {
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void f64s(std::span<const double> vs) {
        for (double v : vs) f64(v);
    }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void expect_magic(std::string_view m) {
        need(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            if (bytes_[pos_ + i] != static_cast<std::uint8_t>(m[i])) throw Error(ErrorCode::Corrupt, "bad magic");
        pos_ += m.size();
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    void f64s(std::span<double> out) {
        for (double& v : out) v = f64();
    }
    void expect_end() const {
        if (pos_ != bytes_.size()) throw Error(ErrorCode::Corrupt, "trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw Error(ErrorCode::Corrupt, "truncated payload");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace cbir::detail
