#include <cstdio>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "cbir/service.hpp"
#include "cbir/synth.hpp"
#include "json.hpp"

namespace cbir {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json probs_json(const Probabilities& p) { return json(std::vector<double>(p.begin(), p.end())); }

struct Options {
    std::string db = "cbir.db";

    std::string dir;
    std::string labels;
    std::string keywords;

    std::uint64_t seed = 1;
    std::size_t hidden = kDefaultHidden;
    TrainConfig train;

    std::string image;
    std::size_t top = 10;
    double threshold = 0.5;
    bool json_out = false;
    bool ungated = false;

    QueryId query_id = 0;
    ImageId image_id = 0;
    std::string polarity;

    int port = 8080;
    std::string host = "127.0.0.1";
    std::string static_dir;

    std::size_t classes = synth::kShapeKinds;
    std::size_t per_class = 5;
    std::string dump;
};

int cmd_enroll(const Options& o, std::ostream& out, std::ostream& err) {
    const auto files = list_images(o.dir);
    if (files.empty()) throw Error(ErrorCode::IoError, "no images found in " + o.dir);

    std::map<std::string, int> label_of;
    if (!o.labels.empty())
        for (const auto& l : read_labels(o.labels, fs::path(o.labels).parent_path()))
            label_of[l.path.filename().string()] = l.category;

    Store store(o.db);
    std::size_t enrolled = 0;
    for (const auto& path : files) {
        EnrollRequest req;
        req.bytes = read_file(path);
        req.keywords = split_list(o.keywords);
        req.metadata["source"] = path.filename().string();
        if (auto it = label_of.find(path.filename().string()); it != label_of.end()) req.label = it->second;
        try {
            const auto r = enroll_image(store, req);
            out << r.id << "\t" << path.filename().string() << "\t" << category_name(r.category) << "\n";
            ++enrolled;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::UntrainedClassifier) throw;
            err << "skipped " << path.string() << ": " << e.what() << "\n";
        }
    }
    out << "enrolled " << enrolled << " of " << files.size() << " images\n";
    return enrolled > 0 ? 0 : 2;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
    const auto labels = read_labels(o.labels, fs::path(o.labels).parent_path());
    const auto report = train_from_labels(labels, o.seed, o.hidden, o.train);
    for (const auto& s : report.skipped) err << "skipped " << s << "\n";
    Store store(o.db);
    store.save_weights(report.result.weights);
    const auto& losses = report.result.epoch_losses;
    out << "trained on " << report.samples << " samples, " << losses.size() << " epochs, final loss "
        << fmt(losses.empty() ? 0.0 : losses.back(), 6) << ", training accuracy "
        << fmt(100.0 * report.train_accuracy, 2) << "%\n";
    return 0;
}

int cmd_fit_norm(const Options& o, std::ostream& out) {
    Store store(o.db);
    const auto n = refit_normalization(store);
    out << "normalization fitted on " << n.fitted_on << " records\n";
    return 0;
}

int cmd_query(const Options& o, std::ostream& out) {
    Store store(o.db);
    QueryParams params;
    params.top_k = o.top;
    params.threshold = o.threshold;
    params.gated = !o.ungated;
    const auto outcome = query(decode_image(read_file(o.image)), store, params);
    if (o.json_out) {
        json results = json::array();
        for (const auto& r : outcome.results)
            results.push_back({{"image_id", r.image_id},
                               {"color_sim", r.color_sim},
                               {"texture_sim", r.texture_sim},
                               {"score", r.score},
                               {"rank", r.rank}});
        out << json{{"query_id", outcome.query_id},
                    {"predicted_category", category_name(outcome.prediction.category)},
                    {"predicted_code", outcome.prediction.category},
                    {"probs", probs_json(outcome.prediction.probs)},
                    {"comparisons", outcome.comparisons},
                    {"results", results}}
                   .dump()
            << "\n";
        return 0;
    }
    out << "query " << outcome.query_id << ": predicted " << category_name(outcome.prediction.category) << " ("
        << fmt(outcome.prediction.probs[outcome.prediction.category], 3) << "), " << outcome.comparisons
        << " comparisons\n";
    out << "rank\timage\tscore\tcolor\ttexture\n";
    for (const auto& r : outcome.results)
        out << r.rank << "\t" << r.image_id << "\t" << fmt(r.score) << "\t" << fmt(r.color_sim) << "\t"
            << fmt(r.texture_sim) << "\n";
    return 0;
}

int cmd_feedback(const Options& o, std::ostream& out) {
    Store store(o.db);
    FeedbackEvent ev;
    ev.query_id = o.query_id;
    ev.image_id = o.image_id;
    ev.polarity = o.polarity == "positive" ? Polarity::Positive : Polarity::Negative;
    const auto r = apply_feedback(ev, store);
    if (r.reassigned)
        out << "image " << o.image_id << " reassigned to " << category_name(*r.new_category) << "\n";
    else
        out << "recorded; image " << o.image_id << " stays in " << category_name(r.state.category) << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    auto labels = read_labels(o.labels, fs::path(o.labels).parent_path());
    // Query files live in the corpus directory.
    for (auto& l : labels) l.path = fs::path(o.dir) / l.path.filename();
    Store store(o.db);
    QueryParams params;
    params.top_k = o.top;
    params.threshold = o.threshold;
    params.gated = !o.ungated;
    const auto report = run_eval(store, labels, params);
    out << (o.json_out ? report.json() + "\n" : report.table());
    return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
    Store store(o.db);
    ServiceOptions so;
    so.host = o.host;
    so.port = o.port;
    so.default_query.top_k = o.top;
    so.default_query.threshold = o.threshold;
    if (!o.static_dir.empty()) so.static_dir = o.static_dir;
    HttpService service(store, so);
    out << "listening on http://" << o.host << ":" << o.port << std::endl;
    service.run();
    return 0;
}

int cmd_synth(const Options& o, std::ostream& out) {
    if (o.classes == 0 || o.classes > synth::kShapeKinds)
        throw Error(ErrorCode::InvalidArgument, "--classes must be in 1.." + std::to_string(synth::kShapeKinds));
    fs::create_directories(o.dir);
    std::ofstream labels(fs::path(o.dir) / "labels.csv");
    labels << "path,category\n";
    const auto samples = synth::corpus(o.classes, o.per_class, o.seed);
    for (const auto& s : samples) {
        const std::string file = s.name + ".ppm";
        write_file(fs::path(o.dir) / file, encode_ppm(s.image));
        labels << file << "," << category_name(s.category) << "\n";
    }
    out << "wrote " << samples.size() << " images and labels.csv to " << o.dir << "\n";
    return 0;
}

int cmd_shape(const Options& o, std::ostream& out) {
    ShapeTrace trace;
    const auto d = shape_descriptor(decode_image(read_file(o.image)), &trace);
    if (!o.dump.empty()) {
        const fs::path dir(o.dump);
        fs::create_directories(dir);
        write_file(dir / "1_reconstruction.pgm", encode_pgm(trace.reconstruction));
        write_file(dir / "2_binary.pgm", encode_pgm(trace.binary));
        write_file(dir / "3_edges.pgm", encode_pgm(trace.edges));
        write_file(dir / "4_skeleton.pgm", encode_pgm(trace.skeleton));
        write_file(dir / "5_skeleton_grid.pgm", encode_pgm(trace.skeleton_grid));
        write_file(dir / "6_log_spectrum.pgm", encode_pgm(trace.log_spectrum));
    }
    for (std::size_t i = 0; i < d.size(); ++i) out << (i ? " " : "") << fmt(d[i], 6);
    out << "\n";
    return 0;
}

int cmd_search(const Options& o, std::ostream& out) {
    Store store(o.db);
    for (ImageId id : store.search_keywords(split_list(o.keywords)))
        out << id << "\t" << category_name(store.category_state(id).category) << "\n";
    return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Content-based image retrieval engine", "cbir"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--db", o.db, "store file")->capture_default_str();

    auto* enroll = app.add_subcommand("enroll", "enroll every image in a directory");
    enroll->add_option("dir", o.dir, "image directory")->required();
    enroll->add_option("--labels", o.labels, "CSV of file,category used as curated labels");
    enroll->add_option("--keywords", o.keywords, "comma-separated keywords for every image");

    auto* train = app.add_subcommand("train", "train the shape classifier from a labels file");
    train->add_option("--labels", o.labels, "CSV of path,category")->required();
    train->add_option("--seed", o.seed);
    train->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber);
    train->add_option("--epochs", o.train.max_epochs)->check(CLI::PositiveNumber);
    train->add_option("--rate", o.train.learning_rate)->check(CLI::PositiveNumber);
    train->add_option("--batch", o.train.batch_size)->check(CLI::PositiveNumber);
    train->add_option("--target-loss", o.train.target_loss);

    app.add_subcommand("fit-norm", "refit color/texture normalization over the store");

    auto* q = app.add_subcommand("query", "retrieve images similar to a query image");
    q->add_option("image", o.image)->required()->check(CLI::ExistingFile);
    q->add_option("--top", o.top)->check(CLI::PositiveNumber);
    q->add_option("--threshold", o.threshold);
    q->add_flag("--json", o.json_out, "print one JSON document");
    q->add_flag("--ungated", o.ungated, "compare against every category");

    auto* fb = app.add_subcommand("feedback", "mark a query result relevant or not");
    fb->add_option("--query", o.query_id)->required();
    fb->add_option("--image", o.image_id)->required();
    fb->add_option("--polarity", o.polarity)->required()->check(CLI::IsMember({"positive", "negative"}));

    auto* ev = app.add_subcommand("eval", "CRR/FRR evaluation over a labeled query set");
    ev->add_option("--corpus", o.dir, "directory of query images")->required();
    ev->add_option("--labels", o.labels)->required();
    ev->add_option("--top", o.top)->check(CLI::PositiveNumber);
    ev->add_option("--threshold", o.threshold);
    ev->add_flag("--json", o.json_out);
    ev->add_flag("--ungated", o.ungated);

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));
    serve->add_option("--host", o.host);
    serve->add_option("--static", o.static_dir, "directory served under /")->check(CLI::ExistingDirectory);
    serve->add_option("--top", o.top)->check(CLI::PositiveNumber);
    serve->add_option("--threshold", o.threshold);

    auto* sy = app.add_subcommand("synth", "render a labeled synthetic shape corpus");
    sy->add_option("--out", o.dir)->required();
    sy->add_option("--classes", o.classes);
    sy->add_option("--per-class", o.per_class)->check(CLI::PositiveNumber);
    sy->add_option("--seed", o.seed);

    auto* sh = app.add_subcommand("shape", "print an image's shape descriptor");
    sh->add_option("image", o.image)->required()->check(CLI::ExistingFile);
    sh->add_option("--dump", o.dump, "write pipeline stages as PGM files here");

    auto* se = app.add_subcommand("search", "list records carrying all keywords");
    se->add_option("keywords", o.keywords)->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> argv_store;
    argv_store.reserve(args.size() + 1);
    argv_store.push_back("cbir");
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (enroll->parsed()) return cmd_enroll(o, out, err);
        if (train->parsed()) return cmd_train(o, out, err);
        if (app.got_subcommand("fit-norm")) return cmd_fit_norm(o, out);
        if (q->parsed()) return cmd_query(o, out);
        if (fb->parsed()) return cmd_feedback(o, out);
        if (ev->parsed()) return cmd_eval(o, out);
        if (serve->parsed()) return cmd_serve(o, out);
        if (sy->parsed()) return cmd_synth(o, out);
        if (sh->parsed()) return cmd_shape(o, out);
        if (se->parsed()) return cmd_search(o, out);
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace cbir
