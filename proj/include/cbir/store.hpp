#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <condition_variable>
#include <mutex>
#include <string>
#include <vector>

#include "cbir/classifier.hpp"
#include "cbir/color_features.hpp"
#include "cbir/imagecore.hpp"
#include "cbir/normalization.hpp"
#include "cbir/shape_pipeline.hpp"
#include "cbir/texture_features.hpp"

struct sqlite3;

namespace cbir {

using ImageId = std::int64_t;
using QueryId = std::int64_t;

/// Mutable per-image category bookkeeping driven by relevance feedback.
struct CategoryState {
    int category = kUncategorized;
    std::set<int> vetoed;
    std::map<int, int> neg_counts;

    bool operator==(const CategoryState&) const = default;
};

struct ImageRecord {
    ImageId id = 0;
    std::vector<std::uint8_t> blob;
    ImageFormat format = ImageFormat::Other;
    Probabilities enroll_probs{};
    ColorFeatureVector color{};
    TextureFeatureVector texture{};
    ShapeDescriptor shape{};
    std::vector<std::string> keywords;
    std::map<std::string, std::string> metadata;
    CategoryState state;

    int category() const noexcept { return state.category; }
};

struct QueryRecord {
    QueryId id = 0;
    int predicted_category = 0;
    std::int64_t timestamp_ms = 0;
    std::string params;
};

enum class Polarity { Positive, Negative };

struct FeedbackEvent {
    QueryId query_id = 0;
    ImageId image_id = 0;
    Polarity polarity = Polarity::Positive;
    std::int64_t timestamp_ms = 0;
};

/// Vectors needed to score one candidate.
struct CandidateVectors {
    ImageId id = 0;
    ColorFeatureVector color{};
    TextureFeatureVector texture{};
};

/// Read-modify-write hook for one feedback event: receives the image's
/// current state, the query's predicted category and the enrollment
/// distribution, and returns the state to persist.
using FeedbackRule = std::function<CategoryState(const CategoryState&, int predicted, Polarity, const Probabilities&)>;

std::int64_t now_ms();

namespace detail {

/// Shared mutex that stops admitting new readers once a writer is waiting.
/// The standard one may prefer readers, which lets a steady query load starve
/// feedback writes indefinitely.
class WriterPriorityMutex {
public:
    void lock() {
        std::unique_lock g(m_);
        ++waiting_writers_;
        cv_.wait(g, [&] { return !writer_ && readers_ == 0; });
        --waiting_writers_;
        writer_ = true;
    }
    void unlock() {
        {
            std::lock_guard g(m_);
            writer_ = false;
        }
        cv_.notify_all();
    }
    void lock_shared() {
        std::unique_lock g(m_);
        cv_.wait(g, [&] { return !writer_ && waiting_writers_ == 0; });
        ++readers_;
    }
    void unlock_shared() {
        bool last;
        {
            std::lock_guard g(m_);
            last = --readers_ == 0;
        }
        if (last) cv_.notify_all();
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::size_t readers_ = 0;
    std::size_t waiting_writers_ = 0;
    bool writer_ = false;
};

}  // namespace detail

/// Single-file embedded store (SQLite). One writer at a time, any number of
/// readers; every mutation is one transaction, so readers never observe a
/// partially applied update.
class Store {
public:
    explicit Store(const std::filesystem::path& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    void close();
    bool is_open() const;
    const std::filesystem::path& path() const noexcept { return path_; }

    /// Assigns and returns a fresh id (strictly increasing); `r.id` is ignored.
    ImageId put_record(const ImageRecord& r);
    ImageRecord get_record(ImageId id) const;
    bool has_record(ImageId id) const;
    std::vector<ImageId> list_by_category(int code) const;
    std::vector<ImageId> all_ids() const;
    std::size_t record_count() const;

    /// Vectors of every record in `category`, or of all records when nullopt,
    /// read in one consistent snapshot, ascending by id.
    std::vector<CandidateVectors> candidates(std::optional<int> category) const;
    std::vector<ColorFeatureVector> all_color_vectors() const;
    std::vector<TextureFeatureVector> all_texture_vectors() const;

    void update_category(ImageId id, const CategoryState& state);
    CategoryState category_state(ImageId id) const;

    /// Case-insensitive whole-token match, AND across tokens.
    std::vector<ImageId> search_keywords(const std::vector<std::string>& tokens) const;

    void save_weights(const NetworkWeights& w);
    NetworkWeights load_weights() const;
    bool has_weights() const;

    void save_normalization(const CorpusNormalization& n);
    CorpusNormalization load_normalization() const;
    bool has_normalization() const;

    QueryId add_query(const QueryRecord& q);
    QueryRecord get_query(QueryId id) const;

    /// Validates and persists the event and the state produced by `rule` in
    /// one transaction. Returns (state before, state after).
    std::pair<CategoryState, CategoryState> record_feedback(const FeedbackEvent& ev, const FeedbackRule& rule);
    std::vector<FeedbackEvent> feedback_log() const;

    /// Raw bytes of a named blob in the key/value table.
    std::optional<std::vector<std::uint8_t>> get_blob(const std::string& key) const;
    void put_blob(const std::string& key, std::span<const std::uint8_t> bytes);

private:
    sqlite3* db() const;
    void exec(const char* sql) const;
    void write_state(ImageId id, const CategoryState& state);
    CategoryState read_state(ImageId id) const;

    std::filesystem::path path_;
    sqlite3* db_ = nullptr;
    mutable detail::WriterPriorityMutex rw_;
};

inline constexpr int kStoreSchemaVersion = 1;

}  // namespace cbir
