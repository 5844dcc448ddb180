#include <cctype>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

#include "cbir/service.hpp"

namespace cbir {

namespace {

using nlohmann::json;

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::UnsupportedFormat:
        case ErrorCode::CorruptPayload:
        case ErrorCode::DimMismatch: return 400;
        case ErrorCode::NotFound:
        case ErrorCode::UnknownImage:
        case ErrorCode::UnknownQuery: return 404;
        case ErrorCode::DuplicateFeedback:
        case ErrorCode::NormalizationUnfitted: return 409;
        case ErrorCode::EmptyShape: return 422;
        case ErrorCode::UntrainedClassifier: return 503;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

template <typename Handler>
httplib::Server::Handler guarded(Handler&& handler) {
    return [handler = std::forward<Handler>(handler)](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), to_string(e.code()), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "BadRequest", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

std::vector<std::string> split_keywords(const std::string& s) {
    std::vector<std::string> out;
    std::string current;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

int parse_label(const std::string& name) {
    const auto code = category_from_name(name);
    if (!code) throw Error(ErrorCode::InvalidArgument, "unknown category '" + name + "'");
    return *code;
}

// Request payloads arrive either as JSON with a base64 "image" or as
// multipart/form-data with an "image" file part; both are folded into one
// JSON view here.
struct Payload {
    std::vector<std::uint8_t> image;
    json fields = json::object();
};

Payload parse_payload(const httplib::Request& req, bool image_required) {
    Payload p;
    if (req.is_multipart_form_data()) {
        for (const auto& [name, part] : req.files) {
            if (name == "image") {
                p.image.assign(part.content.begin(), part.content.end());
            } else if (name == "metadata" || name == "keywords") {
                p.fields[name] = json::parse(part.content, nullptr, false);
                if (p.fields[name].is_discarded()) p.fields[name] = part.content;
            } else {
                p.fields[name] = part.content;
            }
        }
    } else {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::InvalidArgument, "malformed JSON body");
        if (body.contains("image")) {
            if (!body["image"].is_string()) throw Error(ErrorCode::InvalidArgument, "image must be base64 text");
            p.image = base64_decode(body["image"].get<std::string>());
            body.erase("image");
        }
        p.fields = std::move(body);
    }
    if (image_required && p.image.empty()) throw Error(ErrorCode::InvalidArgument, "missing image payload");
    return p;
}

template <typename T>
T field_or(const json& fields, const char* key, T fallback) {
    if (!fields.contains(key)) return fallback;
    const json& v = fields[key];
    if (v.is_string()) {
        // Multipart fields are text.
        std::istringstream in(v.get<std::string>());
        T out{};
        if constexpr (std::is_same_v<T, bool>) {
            std::string s = v.get<std::string>();
            return s == "1" || s == "true" || s == "yes";
        } else {
            if (!(in >> out)) throw Error(ErrorCode::InvalidArgument, std::string("bad value for ") + key);
            return out;
        }
    }
    return v.get<T>();
}

json probs_json(const Probabilities& p) { return json(std::vector<double>(p.begin(), p.end())); }

std::string image_url(ImageId id) { return "/images/" + std::to_string(id); }

}  // namespace

struct HttpService::Impl {
    Store& store;
    ServiceOptions options;
    httplib::Server server;

    Impl(Store& s, ServiceOptions o) : store(s), options(std::move(o)) { routes(); }

    void routes() {
        server.Post("/images", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Payload p = parse_payload(req, true);
            EnrollRequest er;
            er.bytes = p.image;
            if (p.fields.contains("keywords")) {
                const auto& k = p.fields["keywords"];
                er.keywords = k.is_string() ? split_keywords(k.get<std::string>()) : k.get<std::vector<std::string>>();
            }
            if (p.fields.contains("metadata")) {
                const auto& m = p.fields["metadata"];
                if (!m.is_object()) throw Error(ErrorCode::InvalidArgument, "metadata must be an object");
                for (const auto& [key, value] : m.items())
                    er.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
            if (p.fields.contains("label") && !p.fields["label"].is_null())
                er.label = parse_label(p.fields["label"].get<std::string>());
            const EnrollResult r = enroll_image(store, er);
            send_json(res, 200,
                      {{"image_id", r.id},
                       {"category", category_name(r.category)},
                       {"category_code", r.category},
                       {"probs", probs_json(r.probs)},
                       {"url", image_url(r.id)}});
        }));

        server.Get(R"(/images/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const ImageRecord r = store.get_record(std::stoll(req.matches[1]));
            res.status = 200;
            res.set_content(reinterpret_cast<const char*>(r.blob.data()), r.blob.size(),
                            std::string(content_type(r.format)));
        }));

        server.Get(R"(/images/(\d+)/meta)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const ImageRecord r = store.get_record(std::stoll(req.matches[1]));
            json neg = json::object();
            for (const auto& [c, n] : r.state.neg_counts) neg[std::string(category_name(c))] = n;
            std::vector<std::string> vetoed;
            for (int c : r.state.vetoed) vetoed.emplace_back(category_name(c));
            send_json(res, 200,
                      {{"image_id", r.id},
                       {"format", format_name(r.format)},
                       {"bytes", r.blob.size()},
                       {"category", category_name(r.category())},
                       {"category_code", r.category()},
                       {"enroll_probs", probs_json(r.enroll_probs)},
                       {"keywords", r.keywords},
                       {"metadata", r.metadata},
                       {"vetoed", vetoed},
                       {"neg_counts", neg},
                       {"color", r.color},
                       {"texture", r.texture},
                       {"shape", r.shape},
                       {"url", image_url(r.id)}});
        }));

        server.Post("/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Payload p = parse_payload(req, true);
            QueryParams params = options.default_query;
            params.top_k = field_or<std::size_t>(p.fields, "top_k", params.top_k);
            params.threshold = field_or<double>(p.fields, "threshold", params.threshold);
            params.gated = field_or<bool>(p.fields, "gated", params.gated);
            const QueryOutcome out = query(decode_image(p.image), store, params);
            json results = json::array();
            for (const auto& r : out.results)
                results.push_back({{"image_id", r.image_id},
                                   {"color_sim", r.color_sim},
                                   {"texture_sim", r.texture_sim},
                                   {"score", r.score},
                                   {"rank", r.rank},
                                   {"url", image_url(r.image_id)}});
            send_json(res, 200,
                      {{"query_id", out.query_id},
                       {"predicted_category", category_name(out.prediction.category)},
                       {"predicted_code", out.prediction.category},
                       {"probs", probs_json(out.prediction.probs)},
                       {"comparisons", out.comparisons},
                       {"results", results}});
        }));

        server.Post("/feedback", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const json body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::InvalidArgument, "malformed JSON body");
            FeedbackEvent ev;
            ev.query_id = body.at("query_id").get<QueryId>();
            ev.image_id = body.at("image_id").get<ImageId>();
            const auto polarity = body.at("polarity").get<std::string>();
            if (polarity == "positive" || polarity == "relevant") {
                ev.polarity = Polarity::Positive;
            } else if (polarity == "negative" || polarity == "not_relevant") {
                ev.polarity = Polarity::Negative;
            } else {
                throw Error(ErrorCode::InvalidArgument, "polarity must be positive or negative");
            }
            const FeedbackOutcome out = apply_feedback(ev, store);
            json body_out = {{"reassigned", out.reassigned}};
            if (out.new_category) {
                body_out["new_category"] = category_name(*out.new_category);
                body_out["new_category_code"] = *out.new_category;
            }
            send_json(res, 200, body_out);
        }));

        server.Get("/search", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto tokens = split_keywords(req.get_param_value("keywords"));
            json results = json::array();
            for (ImageId id : store.search_keywords(tokens)) {
                const CategoryState s = store.category_state(id);
                results.push_back({{"image_id", id},
                                   {"category", category_name(s.category)},
                                   {"category_code", s.category},
                                   {"url", image_url(id)}});
            }
            send_json(res, 200, {{"results", results}});
        }));

        server.Get("/categories", guarded([](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            for (std::size_t i = 0; i < kCategoryCount; ++i)
                list.push_back({{"code", i}, {"name", kCategoryNames[i]}});
            send_json(res, 200, {{"categories", list}});
        }));

        server.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200,
                      {{"status", "ok"},
                       {"records", store.record_count()},
                       {"trained", store.has_weights()},
                       {"normalized", store.has_normalization()}});
        }));

        if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
    }
};

HttpService::HttpService(Store& store, ServiceOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

HttpService::~HttpService() { stop(); }

int HttpService::start() {
    auto& opt = impl_->options;
    if (opt.port == 0) {
        port_ = impl_->server.bind_to_any_port(opt.host);
    } else if (impl_->server.bind_to_port(opt.host, opt.port)) {
        port_ = opt.port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) throw Error(ErrorCode::IoError, "cannot bind " + opt.host + ":" + std::to_string(opt.port));
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port_;
}

void HttpService::run() {
    auto& opt = impl_->options;
    if (!impl_->server.listen(opt.host, opt.port))
        throw Error(ErrorCode::IoError, "cannot listen on " + opt.host + ":" + std::to_string(opt.port));
}

void HttpService::stop() {
    if (impl_) impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace cbir
