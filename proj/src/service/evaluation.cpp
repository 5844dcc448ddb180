#include <cstdio>
#include <map>

#include "cbir/service.hpp"
#include "json.hpp"

namespace cbir {

namespace {

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

}  // namespace

EvalReport summarize_trials(const std::vector<std::pair<int, double>>& trial_crr) {
    std::map<int, std::pair<std::size_t, double>> per_category;
    for (const auto& [category, crr] : trial_crr) {
        auto& [n, sum] = per_category[category];
        ++n;
        sum += crr;
    }
    EvalReport report;
    for (const auto& [category, acc] : per_category) {
        EvalRow row;
        row.category = category;
        row.trials = acc.first;
        row.crr = acc.second / static_cast<double>(acc.first);
        row.frr = 100.0 - row.crr;
        report.rows.push_back(row);
    }
    if (!report.rows.empty()) {
        double sum = 0.0;
        for (const auto& r : report.rows) sum += r.crr;
        report.average_crr = sum / static_cast<double>(report.rows.size());
        report.average_frr = 100.0 - report.average_crr;
    }
    return report;
}

std::string EvalReport::table() const {
    std::string out = pad("Exp. ID", 9) + pad("Query Image Category", 22) + pad("No of trials", 14) +
                      pad("Average CRR", 13) + "Average FRR\n";
    std::size_t id = 1;
    for (const auto& r : rows) {
        out += pad(std::to_string(id++), 9) + pad(std::string(category_name(r.category)), 22) +
               pad(std::to_string(r.trials), 14) + pad(fixed2(r.crr), 13) + fixed2(r.frr) + "\n";
    }
    out += pad("Average Performance", 45) + pad(fixed2(average_crr), 13) + fixed2(average_frr) + "\n";
    return out;
}

std::string EvalReport::json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"category", category_name(r.category)},
                             {"code", r.category},
                             {"trials", r.trials},
                             {"crr", r.crr},
                             {"frr", r.frr}});
    return nlohmann::json{{"rows", rows_json}, {"average_crr", average_crr}, {"average_frr", average_frr}}.dump(2);
}

EvalReport run_eval(Store& store, const std::vector<LabeledPath>& queries, const QueryParams& params) {
    if (queries.empty()) throw Error(ErrorCode::MissingLabels, "no labeled query images");

    std::map<std::string, int> truth_by_name;
    for (const auto& q : queries) truth_by_name[q.path.filename().string()] = q.category;

    std::map<ImageId, std::optional<int>> truth_cache;
    const auto truth_of = [&](ImageId id) -> std::optional<int> {
        if (auto it = truth_cache.find(id); it != truth_cache.end()) return it->second;
        const ImageRecord r = store.get_record(id);
        std::optional<int> truth;
        if (auto s = r.metadata.find("source"); s != r.metadata.end()) {
            const auto name = std::filesystem::path(s->second).filename().string();
            if (auto t = truth_by_name.find(name); t != truth_by_name.end()) truth = t->second;
        }
        if (!truth) {
            if (auto l = r.metadata.find("label"); l != r.metadata.end()) truth = category_from_name(l->second);
        }
        truth_cache[id] = truth;
        return truth;
    };

    std::vector<std::pair<int, double>> trials;
    for (const auto& q : queries) {
        double crr = 0.0;
        try {
            const auto outcome = query(decode_image(read_file(q.path)), store, params);
            if (!outcome.results.empty()) {
                std::size_t relevant = 0;
                for (const auto& r : outcome.results)
                    if (truth_of(r.image_id) == q.category) ++relevant;
                crr = 100.0 * static_cast<double>(relevant) / static_cast<double>(outcome.results.size());
            }
        } catch (const Error& e) {
            // A query the pipeline cannot process retrieves nothing.
            if (e.code() != ErrorCode::EmptyShape) throw;
        }
        trials.emplace_back(q.category, crr);
    }
    return summarize_trials(trials);
}

}  // namespace cbir
