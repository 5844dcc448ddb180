#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cbir/retrieval.hpp"
#include "cbir/store.hpp"

namespace cbir {

// ---- enrollment -----------------------------------------------------------

struct EnrollRequest {
    std::vector<std::uint8_t> bytes;
    std::vector<std::string> keywords;
    std::map<std::string, std::string> metadata;
    /// Curated category; overrides the classifier's prediction when present.
    std::optional<int> label;
};

struct EnrollResult {
    ImageId id = 0;
    int category = 0;
    Probabilities probs{};
};

/// Decodes, extracts all three feature vectors, classifies and persists.
EnrollResult enroll_image(Store& store, const EnrollRequest& req);

// ---- labels ---------------------------------------------------------------

struct LabeledPath {
    std::filesystem::path path;
    int category = 0;
};

/// CSV of `path,category_name`; an optional `path,category` header line is
/// skipped and relative paths resolve against `base`.
std::vector<LabeledPath> read_labels(const std::filesystem::path& file, const std::filesystem::path& base);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Image files in `dir` (non-recursive), sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct TrainingReport {
    TrainResult result;
    std::size_t samples = 0;
    std::vector<std::string> skipped;
    double train_accuracy = 0;
};

/// Extracts shape descriptors for every labeled file and trains a fresh
/// network. Categories present in the labels are required to survive
/// extraction (MissingCategory otherwise).
TrainingReport train_from_labels(const std::vector<LabeledPath>& labels, std::uint64_t seed, std::size_t hidden,
                                 const TrainConfig& cfg);

// ---- evaluation -----------------------------------------------------------

struct EvalRow {
    int category = 0;
    std::size_t trials = 0;
    double crr = 0;
    double frr = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double average_crr = 0;
    double average_frr = 0;

    /// Aligned text table: Exp. ID, category, trials, average CRR, average FRR.
    std::string table() const;
    /// One JSON document with the same rows.
    std::string json() const;
};

/// Ground-truth category of an enrolled record, or nullopt if unknown.
using TruthLookup = std::function<std::optional<int>(ImageId)>;

/// Per-trial precision: 100 * relevant / retrieved (0 when nothing is
/// retrieved). Rows average trials per category; the overall line averages
/// the rows.
EvalReport summarize_trials(const std::vector<std::pair<int, double>>& trial_crr);

/// Runs one query per labeled image. A retrieved record's truth comes from
/// the labels file entry with the same file name as its `source` metadata,
/// falling back to its `label` metadata.
EvalReport run_eval(Store& store, const std::vector<LabeledPath>& queries, const QueryParams& params);

// ---- HTTP -----------------------------------------------------------------

struct ServiceOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> static_dir;
    QueryParams default_query;
};

/// JSON/HTTP front end over one store. Reads run in parallel; mutations go
/// through the store's single-writer lock.
class HttpService {
public:
    HttpService(Store& store, ServiceOptions options);
    ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds (port 0 picks a free one) and serves on a background thread.
    int start();
    /// Blocks serving on the calling thread.
    void run();
    /// Stops accepting and drains in-flight requests.
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
    std::thread thread_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// ---- CLI ------------------------------------------------------------------

/// Exit codes: 0 success, 1 usage error, 2 runtime failure.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbir
