#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <sstream>

#include "cbir/service.hpp"

namespace cbir {

EnrollResult enroll_image(Store& store, const EnrollRequest& req) {
    if (!store.has_weights()) throw Error(ErrorCode::UntrainedClassifier, "train the classifier before enrolling");
    const RasterImage img = decode_image(req.bytes);
    const ImageFeatures f = extract_features(img);
    const NetworkWeights weights = store.load_weights();
    const Prediction p = predict_category(weights, f.shape);

    ImageRecord r;
    r.blob = req.bytes;
    r.format = detect_format(req.bytes);
    r.enroll_probs = p.probs;
    r.color = f.color;
    r.texture = f.texture;
    r.shape = f.shape;
    r.keywords = req.keywords;
    r.metadata = req.metadata;
    r.state.category = req.label.value_or(p.category);
    if (req.label) r.metadata.emplace("label", std::string(category_name(*req.label)));

    EnrollResult out;
    out.id = store.put_record(r);
    out.category = r.state.category;
    out.probs = p.probs;
    return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool is_image_extension(std::string ext) {
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    static const std::array<std::string_view, 7> known = {".ppm", ".pgm", ".png", ".jpg", ".jpeg", ".bmp", ".pnm"};
    return std::find(known.begin(), known.end(), ext) != known.end();
}

}  // namespace

std::vector<LabeledPath> read_labels(const std::filesystem::path& file, const std::filesystem::path& base) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::MissingLabels, "cannot read labels file " + file.string());
    std::vector<LabeledPath> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw Error(ErrorCode::InvalidArgument, file.string() + ":" + std::to_string(line_no) + ": expected path,category");
        const std::string path = trim(line.substr(0, comma));
        const std::string name = trim(line.substr(comma + 1));
        const auto code = category_from_name(name);
        if (!code) {
            if (out.empty() && line_no == 1) continue;  // header
            throw Error(ErrorCode::InvalidArgument,
                        file.string() + ":" + std::to_string(line_no) + ": unknown category '" + name + "'");
        }
        std::filesystem::path p(path);
        out.push_back({p.is_absolute() ? p : base / p, *code});
    }
    if (out.empty()) throw Error(ErrorCode::MissingLabels, "labels file " + file.string() + " has no entries");
    return out;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_extension(entry.path().extension().string())) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

TrainingReport train_from_labels(const std::vector<LabeledPath>& labels, std::uint64_t seed, std::size_t hidden,
                                 const TrainConfig& cfg) {
    TrainingReport report;
    TrainingSet data;
    std::set<int> wanted;
    for (const auto& l : labels) {
        wanted.insert(l.category);
        try {
            const RasterImage img = decode_image(read_file(l.path));
            data.samples.push_back({shape_descriptor(img), l.category});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::EmptyShape && e.code() != ErrorCode::CorruptPayload &&
                e.code() != ErrorCode::UnsupportedFormat && e.code() != ErrorCode::IoError)
                throw;
            report.skipped.push_back(l.path.string() + ": " + e.what());
        }
    }
    data.required_categories.assign(wanted.begin(), wanted.end());
    report.samples = data.samples.size();
    report.result = train(init_network(seed, hidden), data, cfg);
    report.train_accuracy = accuracy(report.result.weights, data.samples);
    return report;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < bytes.size(); i += 3) {
        const std::uint32_t b0 = bytes[i];
        const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
        const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(alphabet[(v >> 18) & 63]);
        out.push_back(alphabet[(v >> 12) & 63]);
        out.push_back(i + 1 < bytes.size() ? alphabet[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < bytes.size() ? alphabet[v & 63] : '=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    const auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+' || c == '-') return 62;
        if (c == '/' || c == '_') return 63;
        return -1;
    };
    // Accept data URLs ("data:image/png;base64,....").
    if (const auto comma = text.find(','); text.starts_with("data:") && comma != std::string_view::npos)
        text.remove_prefix(comma + 1);
    std::vector<std::uint8_t> out;
    std::uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || std::isspace(static_cast<unsigned char>(c))) continue;
        const int v = value(c);
        if (v < 0) throw Error(ErrorCode::InvalidArgument, "invalid base64 payload");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

}  // namespace cbir
