#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <mutex>
#include <iterator>
#include <shared_mutex>

#include "json.hpp"

#include "../binary_io.hpp"
#include "cbir/store.hpp"

namespace cbir {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS images (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    blob BLOB NOT NULL,
    format TEXT NOT NULL,
    category INTEGER NOT NULL,
    enroll_probs BLOB NOT NULL,
    color BLOB NOT NULL,
    texture BLOB NOT NULL,
    shape BLOB NOT NULL,
    keywords TEXT NOT NULL,
    metadata TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS images_by_category ON images(category, id);
CREATE TABLE IF NOT EXISTS vetoes (
    image_id INTEGER NOT NULL REFERENCES images(id),
    category INTEGER NOT NULL,
    PRIMARY KEY (image_id, category)
);
CREATE TABLE IF NOT EXISTS neg_marks (
    image_id INTEGER NOT NULL REFERENCES images(id),
    category INTEGER NOT NULL,
    count INTEGER NOT NULL,
    PRIMARY KEY (image_id, category)
);
CREATE TABLE IF NOT EXISTS keyword_tokens (
    image_id INTEGER NOT NULL REFERENCES images(id),
    token TEXT NOT NULL,
    PRIMARY KEY (token, image_id)
);
CREATE TABLE IF NOT EXISTS kv (
    key TEXT PRIMARY KEY,
    value BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS queries (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    predicted INTEGER NOT NULL,
    ts INTEGER NOT NULL,
    params TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS feedback (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    query_id INTEGER NOT NULL REFERENCES queries(id),
    image_id INTEGER NOT NULL REFERENCES images(id),
    polarity INTEGER NOT NULL,
    ts INTEGER NOT NULL,
    UNIQUE (query_id, image_id)
);
)sql";

constexpr const char* kWeightsKey = "classifier.weights";
constexpr const char* kNormalizationKey = "retrieval.normalization";

[[noreturn]] void fail(sqlite3* db, int rc, const std::string& context) {
    const std::string msg = context + ": " + (db ? sqlite3_errmsg(db) : sqlite3_errstr(rc));
    switch (rc & 0xFF) {
        case SQLITE_FULL: throw Error(ErrorCode::StoreFull, msg);
        case SQLITE_NOTADB:
        case SQLITE_CORRUPT: throw Error(ErrorCode::Corrupt, msg);
        case SQLITE_IOERR:
        case SQLITE_CANTOPEN: throw Error(ErrorCode::IoError, msg);
        default: throw Error(ErrorCode::StoreError, msg);
    }
}

class Statement {
public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
        const int rc = sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr);
        if (rc != SQLITE_OK) fail(db, rc, "prepare");
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    Statement& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Statement& bind(int i, const std::string& v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Statement& bind(int i, std::span<const std::uint8_t> v) {
        // A zero-length blob must still bind as a blob, not NULL.
        static const std::uint8_t empty = 0;
        check(sqlite3_bind_blob(stmt_, i, v.empty() ? &empty : v.data(), static_cast<int>(v.size()),
                                SQLITE_TRANSIENT));
        return *this;
    }

    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        fail(db_, rc, "step");
    }
    void run() {
        while (step()) {
        }
    }

    std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }
    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p), static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    std::vector<std::uint8_t> blob(int col) const {
        const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt_, col));
        const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col));
        return p ? std::vector<std::uint8_t>(p, p + n) : std::vector<std::uint8_t>();
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) fail(db_, rc, "bind");
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

class Transaction {
public:
    explicit Transaction(sqlite3* db) : db_(db) { exec("BEGIN IMMEDIATE"); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec("COMMIT");
        done_ = true;
    }

private:
    void exec(const char* sql) {
        const int rc = sqlite3_exec(db_, sql, nullptr, nullptr, nullptr);
        if (rc != SQLITE_OK) fail(db_, rc, sql);
    }
    sqlite3* db_;
    bool done_ = false;
};

template <std::size_t N>
std::vector<std::uint8_t> pack(const std::array<double, N>& v) {
    detail::ByteWriter w;
    w.f64s(v);
    return w.take();
}

template <std::size_t N>
std::array<double, N> unpack(const std::vector<std::uint8_t>& bytes) {
    detail::ByteReader r(bytes);
    std::array<double, N> out{};
    r.f64s(out);
    r.expect_end();
    return out;
}

ImageFormat parse_format(const std::string& s) {
    for (auto f : {ImageFormat::Ppm, ImageFormat::Pgm, ImageFormat::Png, ImageFormat::Jpeg, ImageFormat::Bmp})
        if (format_name(f) == s) return f;
    return ImageFormat::Other;
}

std::string fold(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::set<std::string> tokenize(const std::vector<std::string>& keywords) {
    std::set<std::string> tokens;
    for (const auto& k : keywords) {
        std::string current;
        for (char c : k) {
            if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
                if (!current.empty()) tokens.insert(fold(current));
                current.clear();
            } else {
                current.push_back(c);
            }
        }
        if (!current.empty()) tokens.insert(fold(current));
    }
    return tokens;
}

void validate(const ImageRecord& r) {
    double sum = 0.0;
    for (double p : r.enroll_probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "enrollment probability out of range");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "enrollment probabilities must sum to 1");
    const int c = r.state.category;
    if (c != kUncategorized && (c < 0 || c >= static_cast<int>(kCategoryCount)))
        throw Error(ErrorCode::InvalidArgument, "category code out of range");
    if (c != kUncategorized && r.state.vetoed.count(c))
        throw Error(ErrorCode::InvalidArgument, "category is vetoed for this record");
}

}  // namespace

Store::Store(const std::filesystem::path& path) : path_(path) {
    const int rc = sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                                   nullptr);
    if (rc != SQLITE_OK) {
        sqlite3* broken = db_;
        db_ = nullptr;
        const std::string msg = broken ? sqlite3_errmsg(broken) : sqlite3_errstr(rc);
        sqlite3_close(broken);
        throw Error(ErrorCode::IoError, "cannot open store " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db_, 5000);
    try {
        Statement version(db_, "PRAGMA user_version");
        version.step();
        const auto v = version.int64(0);
        if (v != 0 && v != kStoreSchemaVersion)
            throw Error(ErrorCode::VersionMismatch, "store schema version " + std::to_string(v));
        exec("PRAGMA foreign_keys = ON");
        exec(kSchema);
        exec(("PRAGMA user_version = " + std::to_string(kStoreSchemaVersion)).c_str());
    } catch (...) {
        sqlite3_close(db_);
        db_ = nullptr;
        throw;
    }
}

Store::~Store() { close(); }

void Store::close() {
    std::unique_lock lock(rw_);
    if (db_) {
        sqlite3_close_v2(db_);
        db_ = nullptr;
    }
}

bool Store::is_open() const {
    std::shared_lock lock(rw_);
    return db_ != nullptr;
}

sqlite3* Store::db() const {
    if (!db_) throw Error(ErrorCode::IoError, "store is closed");
    return db_;
}

void Store::exec(const char* sql) const {
    char* err = nullptr;
    const int rc = sqlite3_exec(db(), sql, nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        const std::string msg = err ? err : "";
        sqlite3_free(err);
        fail(nullptr, rc, msg);
    }
}

ImageId Store::put_record(const ImageRecord& r) {
    validate(r);
    std::unique_lock lock(rw_);
    sqlite3* h = db();
    Transaction txn(h);
    Statement ins(h,
                  "INSERT INTO images (blob, format, category, enroll_probs, color, texture, shape, keywords, metadata) "
                  "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, r.blob)
        .bind(2, std::string(format_name(r.format)))
        .bind(3, r.state.category)
        .bind(4, pack(r.enroll_probs))
        .bind(5, pack(r.color))
        .bind(6, pack(r.texture))
        .bind(7, pack(r.shape))
        .bind(8, nlohmann::json(r.keywords).dump())
        .bind(9, nlohmann::json(r.metadata).dump());
    ins.run();
    const ImageId id = sqlite3_last_insert_rowid(h);
    for (const auto& token : tokenize(r.keywords)) {
        Statement kw(h, "INSERT OR IGNORE INTO keyword_tokens (image_id, token) VALUES (?, ?)");
        kw.bind(1, id).bind(2, token).run();
    }
    write_state(id, r.state);
    txn.commit();
    return id;
}

ImageRecord Store::get_record(ImageId id) const {
    std::shared_lock lock(rw_);
    Statement q(db(),
                "SELECT blob, format, category, enroll_probs, color, texture, shape, keywords, metadata "
                "FROM images WHERE id = ?");
    q.bind(1, id);
    if (!q.step()) throw Error(ErrorCode::NotFound, "image " + std::to_string(id));
    ImageRecord r;
    r.id = id;
    r.blob = q.blob(0);
    r.format = parse_format(q.text(1));
    r.enroll_probs = unpack<kCategoryCount>(q.blob(3));
    r.color = unpack<kColorFeatures>(q.blob(4));
    r.texture = unpack<kTextureFeatures>(q.blob(5));
    r.shape = unpack<kShapeFeatures>(q.blob(6));
    try {
        r.keywords = nlohmann::json::parse(q.text(7)).get<std::vector<std::string>>();
        r.metadata = nlohmann::json::parse(q.text(8)).get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Corrupt, std::string("record metadata: ") + e.what());
    }
    r.state = read_state(id);
    return r;
}

bool Store::has_record(ImageId id) const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT 1 FROM images WHERE id = ?");
    q.bind(1, id);
    return q.step();
}

std::vector<ImageId> Store::list_by_category(int code) const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT id FROM images WHERE category = ? ORDER BY id");
    q.bind(1, code);
    std::vector<ImageId> ids;
    while (q.step()) ids.push_back(q.int64(0));
    return ids;
}

std::vector<ImageId> Store::all_ids() const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT id FROM images ORDER BY id");
    std::vector<ImageId> ids;
    while (q.step()) ids.push_back(q.int64(0));
    return ids;
}

std::size_t Store::record_count() const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT COUNT(*) FROM images");
    q.step();
    return static_cast<std::size_t>(q.int64(0));
}

std::vector<CandidateVectors> Store::candidates(std::optional<int> category) const {
    std::shared_lock lock(rw_);
    Statement q(db(), category ? "SELECT id, color, texture FROM images WHERE category = ? ORDER BY id"
                               : "SELECT id, color, texture FROM images ORDER BY id");
    if (category) q.bind(1, *category);
    std::vector<CandidateVectors> out;
    while (q.step()) out.push_back({q.int64(0), unpack<kColorFeatures>(q.blob(1)), unpack<kTextureFeatures>(q.blob(2))});
    return out;
}

std::vector<ColorFeatureVector> Store::all_color_vectors() const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT color FROM images ORDER BY id");
    std::vector<ColorFeatureVector> out;
    while (q.step()) out.push_back(unpack<kColorFeatures>(q.blob(0)));
    return out;
}

std::vector<TextureFeatureVector> Store::all_texture_vectors() const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT texture FROM images ORDER BY id");
    std::vector<TextureFeatureVector> out;
    while (q.step()) out.push_back(unpack<kTextureFeatures>(q.blob(0)));
    return out;
}

void Store::write_state(ImageId id, const CategoryState& state) {
    sqlite3* h = db();
    Statement upd(h, "UPDATE images SET category = ? WHERE id = ?");
    upd.bind(1, state.category).bind(2, id).run();
    if (sqlite3_changes(h) == 0) throw Error(ErrorCode::NotFound, "image " + std::to_string(id));
    Statement(h, "DELETE FROM vetoes WHERE image_id = ?").bind(1, id).run();
    Statement(h, "DELETE FROM neg_marks WHERE image_id = ?").bind(1, id).run();
    for (int c : state.vetoed) Statement(h, "INSERT INTO vetoes VALUES (?, ?)").bind(1, id).bind(2, c).run();
    for (const auto& [c, n] : state.neg_counts)
        if (n > 0) Statement(h, "INSERT INTO neg_marks VALUES (?, ?, ?)").bind(1, id).bind(2, c).bind(3, n).run();
}

CategoryState Store::read_state(ImageId id) const {
    sqlite3* h = db();
    CategoryState s;
    Statement cat(h, "SELECT category FROM images WHERE id = ?");
    cat.bind(1, id);
    if (!cat.step()) throw Error(ErrorCode::NotFound, "image " + std::to_string(id));
    s.category = static_cast<int>(cat.int64(0));
    Statement v(h, "SELECT category FROM vetoes WHERE image_id = ?");
    v.bind(1, id);
    while (v.step()) s.vetoed.insert(static_cast<int>(v.int64(0)));
    Statement n(h, "SELECT category, count FROM neg_marks WHERE image_id = ?");
    n.bind(1, id);
    while (n.step()) s.neg_counts[static_cast<int>(n.int64(0))] = static_cast<int>(n.int64(1));
    return s;
}

void Store::update_category(ImageId id, const CategoryState& state) {
    if (state.category != kUncategorized && state.vetoed.count(state.category))
        throw Error(ErrorCode::InvalidArgument, "category is vetoed for this record");
    std::unique_lock lock(rw_);
    Transaction txn(db());
    write_state(id, state);
    txn.commit();
}

CategoryState Store::category_state(ImageId id) const {
    std::shared_lock lock(rw_);
    return read_state(id);
}

std::vector<ImageId> Store::search_keywords(const std::vector<std::string>& tokens) const {
    const auto wanted = tokenize(tokens);
    if (wanted.empty()) return {};
    std::shared_lock lock(rw_);
    std::optional<std::set<ImageId>> result;
    for (const auto& token : wanted) {
        Statement q(db(), "SELECT image_id FROM keyword_tokens WHERE token = ?");
        q.bind(1, token);
        std::set<ImageId> hits;
        while (q.step()) hits.insert(q.int64(0));
        if (!result) {
            result = std::move(hits);
        } else {
            std::set<ImageId> both;
            std::set_intersection(result->begin(), result->end(), hits.begin(), hits.end(),
                                  std::inserter(both, both.end()));
            result = std::move(both);
        }
        if (result->empty()) break;
    }
    return {result->begin(), result->end()};
}

std::optional<std::vector<std::uint8_t>> Store::get_blob(const std::string& key) const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT value FROM kv WHERE key = ?");
    q.bind(1, key);
    if (!q.step()) return std::nullopt;
    return q.blob(0);
}

void Store::put_blob(const std::string& key, std::span<const std::uint8_t> bytes) {
    std::unique_lock lock(rw_);
    Statement q(db(), "INSERT INTO kv (key, value) VALUES (?, ?) ON CONFLICT(key) DO UPDATE SET value = excluded.value");
    q.bind(1, key).bind(2, bytes).run();
}

void Store::save_weights(const NetworkWeights& w) { put_blob(kWeightsKey, serialize(w)); }

NetworkWeights Store::load_weights() const {
    const auto bytes = get_blob(kWeightsKey);
    if (!bytes) throw Error(ErrorCode::NotFound, "no classifier weights stored");
    return deserialize_weights(*bytes);
}

bool Store::has_weights() const { return get_blob(kWeightsKey).has_value(); }

void Store::save_normalization(const CorpusNormalization& n) { put_blob(kNormalizationKey, serialize(n)); }

CorpusNormalization Store::load_normalization() const {
    const auto bytes = get_blob(kNormalizationKey);
    if (!bytes) throw Error(ErrorCode::NotFound, "no normalization stored");
    return deserialize_normalization(*bytes);
}

bool Store::has_normalization() const { return get_blob(kNormalizationKey).has_value(); }

QueryId Store::add_query(const QueryRecord& q) {
    std::unique_lock lock(rw_);
    Statement ins(db(), "INSERT INTO queries (predicted, ts, params) VALUES (?, ?, ?)");
    ins.bind(1, q.predicted_category).bind(2, q.timestamp_ms).bind(3, q.params).run();
    return sqlite3_last_insert_rowid(db());
}

QueryRecord Store::get_query(QueryId id) const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT predicted, ts, params FROM queries WHERE id = ?");
    q.bind(1, id);
    if (!q.step()) throw Error(ErrorCode::NotFound, "query " + std::to_string(id));
    return {id, static_cast<int>(q.int64(0)), q.int64(1), q.text(2)};
}

std::pair<CategoryState, CategoryState> Store::record_feedback(const FeedbackEvent& ev, const FeedbackRule& rule) {
    std::unique_lock lock(rw_);
    sqlite3* h = db();
    Transaction txn(h);

    Statement query(h, "SELECT predicted FROM queries WHERE id = ?");
    query.bind(1, ev.query_id);
    if (!query.step()) throw Error(ErrorCode::UnknownQuery, "query " + std::to_string(ev.query_id));
    const int predicted = static_cast<int>(query.int64(0));

    Statement image(h, "SELECT enroll_probs FROM images WHERE id = ?");
    image.bind(1, ev.image_id);
    if (!image.step()) throw Error(ErrorCode::UnknownImage, "image " + std::to_string(ev.image_id));
    const auto probs = unpack<kCategoryCount>(image.blob(0));

    Statement dup(h, "SELECT 1 FROM feedback WHERE query_id = ? AND image_id = ?");
    dup.bind(1, ev.query_id).bind(2, ev.image_id);
    if (dup.step())
        throw Error(ErrorCode::DuplicateFeedback,
                    "feedback already recorded for query " + std::to_string(ev.query_id) + ", image " +
                        std::to_string(ev.image_id));

    Statement ins(h, "INSERT INTO feedback (query_id, image_id, polarity, ts) VALUES (?, ?, ?, ?)");
    ins.bind(1, ev.query_id)
        .bind(2, ev.image_id)
        .bind(3, ev.polarity == Polarity::Positive ? 1 : 0)
        .bind(4, ev.timestamp_ms)
        .run();

    CategoryState before = read_state(ev.image_id);
    CategoryState after = rule(before, predicted, ev.polarity, probs);
    write_state(ev.image_id, after);
    txn.commit();
    return {std::move(before), std::move(after)};
}

std::vector<FeedbackEvent> Store::feedback_log() const {
    std::shared_lock lock(rw_);
    Statement q(db(), "SELECT query_id, image_id, polarity, ts FROM feedback ORDER BY seq");
    std::vector<FeedbackEvent> out;
    while (q.step())
        out.push_back({q.int64(0), q.int64(1), q.int64(2) ? Polarity::Positive : Polarity::Negative, q.int64(3)});
    return out;
}

}  // namespace cbir
