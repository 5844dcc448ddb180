#include <sqlite3.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "cbir/store.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cbir;
using testing::code_of;
using testing::TempDir;

namespace {

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

ImageRecord make_record(std::mt19937_64& rng, int category) {
    ImageRecord r;
    r.blob.resize(50 + rng() % 500);
    for (auto& b : r.blob) b = static_cast<std::uint8_t>(rng());
    r.format = ImageFormat::Png;
    double sum = 0;
    for (double& p : r.enroll_probs) sum += p = 1.0 + static_cast<double>(rng() % 100);
    for (double& p : r.enroll_probs) p /= sum;
    std::uniform_real_distribution<double> u(0, 255);
    for (double& v : r.color) v = u(rng);
    for (double& v : r.texture) v = u(rng) * 10;
    for (double& v : r.shape) v = u(rng) / 255;
    r.keywords = {"Boat", "harbor"};
    r.metadata = {{"source", "img" + std::to_string(rng() % 1000) + ".png"}, {"owner", "ana"}};
    r.state.category = category;
    return r;
}

void check_same(const ImageRecord& a, const ImageRecord& b) {
    CHECK(a.blob == b.blob);
    CHECK(a.format == b.format);
    CHECK(a.enroll_probs == b.enroll_probs);
    CHECK(a.color == b.color);
    CHECK(a.texture == b.texture);
    CHECK(a.shape == b.shape);
    CHECK(a.keywords == b.keywords);
    CHECK(a.metadata == b.metadata);
    CHECK(a.state == b.state);
}

// Counts negatives per predicted category; enough to exercise the transaction.
CategoryState count_rule(const CategoryState& s, int predicted, Polarity p, const Probabilities&) {
    CategoryState next = s;
    if (p == Polarity::Negative) ++next.neg_counts[predicted];
    return next;
}

}  // namespace

TEST_CASE("record round trip and ids") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(1);
    const auto a = make_record(rng, 2);
    const auto b = make_record(rng, 2);
    const ImageId ia = store.put_record(a);
    const ImageId ib = store.put_record(b);
    CHECK(ib > ia);
    const auto got = store.get_record(ia);
    CHECK(got.id == ia);
    check_same(got, a);
    CHECK(fnv1a(store.get_record(ib).blob) == fnv1a(b.blob));
    CHECK(store.has_record(ib));
    CHECK(!store.has_record(ib + 100));
    CHECK(code_of([&] { store.get_record(ib + 100); }) == ErrorCode::NotFound);
    CHECK(store.record_count() == 2);
    CHECK(store.all_ids() == std::vector<ImageId>{ia, ib});

    store.close();
    CHECK(!store.is_open());
    CHECK(code_of([&] { store.put_record(a); }) == ErrorCode::IoError);
}

TEST_CASE("record validation") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(2);
    auto r = make_record(rng, 1);
    r.enroll_probs[0] += 0.1;
    CHECK(code_of([&] { store.put_record(r); }) == ErrorCode::InvalidArgument);
    r = make_record(rng, 1);
    r.state.vetoed = {1};
    CHECK(code_of([&] { store.put_record(r); }) == ErrorCode::InvalidArgument);
    r = make_record(rng, 12);
    CHECK(code_of([&] { store.put_record(r); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("category listing follows updates") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(3);
    std::vector<ImageId> ids;
    for (int i = 0; i < 6; ++i) ids.push_back(store.put_record(make_record(rng, i % 2)));
    CHECK(store.list_by_category(0) == std::vector<ImageId>{ids[0], ids[2], ids[4]});
    CHECK(store.list_by_category(7).empty());

    CategoryState moved;
    moved.category = 7;
    moved.vetoed = {0};
    moved.neg_counts = {{0, 3}};
    store.update_category(ids[2], moved);
    CHECK(store.list_by_category(0) == std::vector<ImageId>{ids[0], ids[4]});
    CHECK(store.list_by_category(7) == std::vector<ImageId>{ids[2]});
    CHECK(store.category_state(ids[2]) == moved);
    CHECK(code_of([&] { store.update_category(999, moved); }) == ErrorCode::NotFound);

    const auto c = store.candidates(1);
    REQUIRE(c.size() == 3);
    CHECK(c[0].id == ids[1]);
    CHECK(c[2].id == ids[5]);
    CHECK(store.candidates(std::nullopt).size() == 6);
    CHECK(store.all_color_vectors().size() == 6);
}

TEST_CASE("keyword search") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(4);
    auto a = make_record(rng, 0);
    a.keywords = {"Red", "boat"};
    auto b = make_record(rng, 0);
    b.keywords = {"boat"};
    const auto ia = store.put_record(a), ib = store.put_record(b);
    CHECK(store.search_keywords({"BOAT"}) == std::vector<ImageId>{ia, ib});
    CHECK(store.search_keywords({"boat", "red"}) == std::vector<ImageId>{ia});
    CHECK(store.search_keywords({"plane"}).empty());
    CHECK(store.search_keywords({"bo"}).empty());
}

TEST_CASE("weights and normalization persistence") {
    TempDir dir;
    Store store(dir / "s.db");
    CHECK(!store.has_weights());
    CHECK(code_of([&] { store.load_weights(); }) == ErrorCode::NotFound);
    CHECK(code_of([&] { store.load_normalization(); }) == ErrorCode::NotFound);
    const auto w = init_network(12, 5);
    store.save_weights(w);
    CHECK(store.load_weights() == w);

    CorpusNormalization n;
    n.color_max.fill(3.0);
    n.texture_min.fill(-1.0);
    n.fitted_on = 9;
    store.save_normalization(n);
    CHECK(store.load_normalization() == n);

    const std::vector<std::uint8_t> garbage = {'C', 'B', 'N', 'W', 1};
    store.put_blob("classifier.weights", garbage);
    CHECK(code_of([&] { store.load_weights(); }) == ErrorCode::Corrupt);
}

TEST_CASE("feedback transaction checks") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(5);
    const auto id = store.put_record(make_record(rng, 3));
    const auto q = store.add_query({0, 3, 1000, "{}"});
    CHECK(store.get_query(q).predicted_category == 3);

    FeedbackEvent ev{q, id, Polarity::Negative, 5};
    const auto [before, after] = store.record_feedback(ev, count_rule);
    CHECK(before.neg_counts.empty());
    CHECK(after.neg_counts.at(3) == 1);
    CHECK(store.category_state(id) == after);
    CHECK(code_of([&] { store.record_feedback(ev, count_rule); }) == ErrorCode::DuplicateFeedback);
    CHECK(code_of([&] { store.record_feedback({q + 9, id, Polarity::Negative, 1}, count_rule); }) ==
          ErrorCode::UnknownQuery);
    CHECK(code_of([&] { store.record_feedback({q, id + 9, Polarity::Negative, 1}, count_rule); }) ==
          ErrorCode::UnknownImage);
    // A rule that throws leaves nothing behind.
    const auto q2 = store.add_query({0, 3, 1001, "{}"});
    CHECK_THROWS(store.record_feedback({q2, id, Polarity::Negative, 2}, [](auto&&...) -> CategoryState {
        throw std::runtime_error("boom");
    }));
    CHECK(store.feedback_log().size() == 1);
    CHECK(store.category_state(id) == after);
}

TEST_CASE("clean reopen preserves everything") {
    TempDir dir;
    std::mt19937_64 rng(6);
    std::vector<ImageRecord> records;
    std::vector<ImageId> ids;
    const auto w = init_network(77);
    {
        Store store(dir / "s.db");
        for (int i = 0; i < 8; ++i) {
            records.push_back(make_record(rng, i % 3));
            ids.push_back(store.put_record(records.back()));
        }
        store.save_weights(w);
        const auto q = store.add_query({0, 1, 10, R"({"top_k":5})"});
        store.record_feedback({q, ids[1], Polarity::Negative, 11}, count_rule);
        records[1].state.neg_counts[1] = 1;
    }
    Store store(dir / "s.db");
    REQUIRE(store.record_count() == 8);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto r = store.get_record(ids[i]);
        CHECK(fnv1a(r.blob) == fnv1a(records[i].blob));
        check_same(r, records[i]);
    }
    CHECK(fnv1a(serialize(store.load_weights())) == fnv1a(serialize(w)));
    const auto log = store.feedback_log();
    REQUIRE(log.size() == 1);
    CHECK(log[0].image_id == ids[1]);
    CHECK(log[0].timestamp_ms == 11);
    CHECK(store.get_query(log[0].query_id).params == R"({"top_k":5})");
}

TEST_CASE("foreign or damaged files are rejected") {
    TempDir dir;
    {
        std::ofstream junk(dir / "junk.db", std::ios::binary);
        junk << std::string(4096, 'x');
    }
    CHECK(code_of([&] { Store s(dir / "junk.db"); }) == ErrorCode::Corrupt);

    {
        Store s(dir / "old.db");
    }
    sqlite3* raw = nullptr;
    REQUIRE(sqlite3_open((dir / "old.db").c_str(), &raw) == SQLITE_OK);
    sqlite3_exec(raw, "PRAGMA user_version = 42", nullptr, nullptr, nullptr);
    sqlite3_close(raw);
    CHECK(code_of([&] { Store s(dir / "old.db"); }) == ErrorCode::VersionMismatch);

    CHECK(code_of([&] { Store s(dir / "missing" / "x.db"); }) == ErrorCode::IoError);
}

TEST_CASE("category updates are atomic under concurrent readers") {
    TempDir dir;
    Store store(dir / "s.db");
    std::mt19937_64 rng(7);
    std::vector<ImageId> ids;
    for (int i = 0; i < 4; ++i) ids.push_back(store.put_record(make_record(rng, 0)));

    // Every state the writer persists satisfies: category c has c+1 strikes
    // recorded against category 8 and c itself is never vetoed, while all
    // other codes below c are. A torn read breaks one of these.
    const auto state_for = [](int c) {
        CategoryState s;
        s.category = c;
        s.neg_counts[8] = c + 1;
        for (int v = 0; v < c; ++v) s.vetoed.insert(v);
        return s;
    };
    const auto consistent = [&](const CategoryState& s) { return s == state_for(s.category); };

    std::atomic<bool> done{false};
    std::atomic<int> violations{0};
    std::atomic<long> reads{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 8; ++t) {
        readers.emplace_back([&, t] {
            while (!done.load()) {
                const ImageId id = ids[static_cast<std::size_t>(t) % ids.size()];
                const auto s = store.category_state(id);
                if (s.category != 0 || !s.neg_counts.empty()) {
                    if (!consistent(s)) ++violations;
                }
                const auto r = store.get_record(id);
                if (r.state.category != 0 && !consistent(r.state)) ++violations;
                for (const auto& c : store.candidates(std::nullopt))
                    if (c.id == id && c.color != r.color) ++violations;
                ++reads;
            }
        });
    }
    for (int round = 0; round < 100; ++round)
        for (ImageId id : ids) store.update_category(id, state_for(1 + round % 7));
    done = true;
    for (auto& t : readers) t.join();
    CHECK(violations.load() == 0);
    CHECK(reads.load() > 0);
    for (ImageId id : ids) CHECK(store.category_state(id) == state_for(1 + 99 % 7));
}
