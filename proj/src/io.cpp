#include "bubbleid/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bubbleid::io {

namespace {

[[noreturn]] void format_error(const std::string& what) { throw Error(ErrorKind::Format, what); }

class HeaderReader {
public:
    explicit HeaderReader(const std::string& bytes) : s_(bytes) {}

    void skip_space() {
        while (pos_ < s_.size()) {
            if (s_[pos_] == '#') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long integer() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) format_error("PGM header: expected an integer");
        if (pos_ - start > 9) format_error("PGM header: value too large");
        return std::stol(s_.substr(start, pos_ - start));
    }

    std::size_t pos_ = 0;
    const std::string& s_;
};

void put_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32_le(const std::string& s, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
    return v;
}

}  // namespace

Pgm parse_pgm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') format_error("not a binary PGM (P5) file");
    HeaderReader h(bytes);
    h.pos_ = 2;
    Pgm pgm;
    pgm.width = static_cast<int>(h.integer());
    pgm.height = static_cast<int>(h.integer());
    pgm.maxval = static_cast<int>(h.integer());
    if (pgm.width <= 0 || pgm.height <= 0) format_error("PGM dimensions must be positive");
    if (pgm.maxval <= 0 || pgm.maxval > 65535) format_error("PGM maxval out of range");
    if (h.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[h.pos_]))) {
        format_error("PGM header not terminated");
    }
    ++h.pos_;
    const std::size_t n = static_cast<std::size_t>(pgm.width) * pgm.height;
    const std::size_t bps = pgm.maxval > 255 ? 2 : 1;
    if (bytes.size() - h.pos_ < n * bps) format_error("PGM data truncated");
    pgm.samples.resize(n);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.pos_);
    for (std::size_t i = 0; i < n; ++i) {
        pgm.samples[i] = bps == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
    }
    return pgm;
}

std::string encode_pgm(const Pgm& pgm) {
    std::ostringstream head;
    head << "P5\n" << pgm.width << ' ' << pgm.height << '\n' << pgm.maxval << '\n';
    std::string out = head.str();
    const bool wide = pgm.maxval > 255;
    out.reserve(out.size() + pgm.samples.size() * (wide ? 2 : 1));
    for (std::uint16_t v : pgm.samples) {
        if (wide) out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xFF));
    }
    return out;
}

LabelMap decode_label_map(const std::string& bytes) {
    const Pgm pgm = parse_pgm(bytes);
    LabelMap labels(pgm.width, pgm.height, 0);
    std::copy(pgm.samples.begin(), pgm.samples.end(), labels.pixels().begin());
    return labels;
}

std::string encode_label_map(const LabelMap& labels) {
    Pgm pgm{labels.width(), labels.height(), 65535, {}};
    pgm.samples.reserve(labels.pixels().size());
    for (Label v : labels.pixels()) {
        if (v > 65535) format_error("instance id " + std::to_string(v) + " does not fit in 16 bits");
        pgm.samples.push_back(static_cast<std::uint16_t>(v));
    }
    return encode_pgm(pgm);
}

LabelMap read_label_map(const fs::path& path) { return decode_label_map(read_file(path)); }

void write_label_map(const fs::path& path, const LabelMap& labels) {
    write_file_atomic(path, encode_label_map(labels));
}

Mask read_mask(const fs::path& path) {
    const Pgm pgm = parse_pgm(read_file(path));
    Mask m(pgm.width, pgm.height, 0);
    for (std::size_t i = 0; i < pgm.samples.size(); ++i) m.pixels()[i] = pgm.samples[i] != 0;
    return m;
}

std::string encode_gray(const Raster<std::uint8_t>& image) {
    Pgm pgm{image.width(), image.height(), 255, {}};
    pgm.samples.assign(image.pixels().begin(), image.pixels().end());
    return encode_pgm(pgm);
}

void write_gray(const fs::path& path, const Raster<std::uint8_t>& image) {
    write_file_atomic(path, encode_gray(image));
}

std::string encode_weight_map(const Raster<float>& weights) {
    std::string out(kWeightMagic, 8);
    put_u32_le(out, static_cast<std::uint32_t>(weights.width()));
    put_u32_le(out, static_cast<std::uint32_t>(weights.height()));
    for (float v : weights.pixels()) put_u32_le(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Raster<float> decode_weight_map(const std::string& bytes) {
    if (bytes.size() < 16 || bytes.compare(0, 8, kWeightMagic) != 0) format_error("not a weight map file");
    const std::uint32_t w = get_u32_le(bytes, 8), h = get_u32_le(bytes, 12);
    if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) format_error("weight map dimensions out of range");
    if (bytes.size() != 16 + 4ull * w * h) format_error("weight map size does not match its header");
    Raster<float> out(static_cast<int>(w), static_cast<int>(h), 0.0f);
    for (std::size_t i = 0; i < out.pixels().size(); ++i) {
        out.pixels()[i] = std::bit_cast<float>(get_u32_le(bytes, 16 + 4 * i));
    }
    return out;
}

void write_weight_map(const fs::path& path, const Raster<float>& weights, json meta) {
    meta["width"] = weights.width();
    meta["height"] = weights.height();
    meta["dtype"] = "float32-le";
    meta["header_bytes"] = 16;
    write_file_atomic(path, encode_weight_map(weights));
    fs::path sidecar = path;
    sidecar += ".json";
    write_file_atomic(sidecar, meta.dump(2) + '\n');
}

Raster<float> read_weight_map(const fs::path& path) { return decode_weight_map(read_file(path)); }

namespace {

const char* unit_name(LengthUnit u) { return u == LengthUnit::px ? "px" : "mm"; }

LengthUnit unit_from(const std::string& s) {
    if (s == "px") return LengthUnit::px;
    if (s == "mm") return LengthUnit::mm;
    format_error("unknown unit '" + s + "'");
}

Point point_from(const json& j) {
    if (!j.is_array() || j.size() != 2) format_error("center must be [row, col]");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        format_error(e.what());
    }
}

}  // namespace

json to_json(const PolygonRecord& r) {
    return {{"id", r.id},
            {"center", {r.polygon.center.row, r.polygon.center.col}},
            {"k", r.polygon.k()},
            {"unit", unit_name(r.polygon.unit)},
            {"radii", r.polygon.radii}};
}

json to_json(const EllipseRecord& r) {
    return {{"id", r.id},
            {"center", {r.ellipse.center.row, r.ellipse.center.col}},
            {"a_px", r.ellipse.a},
            {"b_px", r.ellipse.b},
            {"theta_rad", r.ellipse.theta},
            {"fallback", r.fallback}};
}

PolygonRecord polygon_record(const json& j) {
    return guarded([&] {
        PolygonRecord r;
        r.id = j.at("id").get<Label>();
        r.polygon.center = point_from(j.at("center"));
        r.polygon.unit = unit_from(j.at("unit").get<std::string>());
        r.polygon.radii = j.at("radii").get<std::vector<double>>();
        if (j.at("k").get<int>() != r.polygon.k()) format_error("k does not match the number of radii");
        return r;
    });
}

EllipseRecord ellipse_record(const json& j) {
    return guarded([&] {
        EllipseRecord r;
        r.id = j.at("id").get<Label>();
        r.ellipse.center = point_from(j.at("center"));
        r.ellipse.a = j.at("a_px").get<double>();
        r.ellipse.b = j.at("b_px").get<double>();
        r.ellipse.theta = j.at("theta_rad").get<double>();
        r.fallback = j.value("fallback", false);
        return r;
    });
}

std::vector<json> parse_json_lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream is(text);
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            format_error("line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

json model_to_json(const RdcModel& model) {
    const Mlp& net = model.network;
    json layers = json::array();
    for (int l = 0; l < net.layer_count(); ++l) {
        const auto w = net.weights(l);
        const auto b = net.bias(l);
        layers.push_back({{"rows", net.rows(l)},
                          {"cols", net.cols(l)},
                          {"weights", std::vector<double>(w.begin(), w.end())},
                          {"bias", std::vector<double>(b.begin(), b.end())}});
    }
    const TrainConfig& m = model.meta;
    return {{"version", model.version},
            {"k", model.k()},
            {"unit", "mm"},
            {"activation", "relu"},
            {"layers", layers},
            {"train_meta",
             {{"lr", m.adam.learning_rate},
              {"beta1", m.adam.beta1},
              {"beta2", m.adam.beta2},
              {"eps", m.adam.epsilon},
              {"epochs", m.epochs},
              {"batch", m.batch_size},
              {"validation_fraction", m.validation_fraction},
              {"seed", m.seed},
              {"hidden", std::vector<int>(m.layer_sizes.begin() + 1, m.layer_sizes.end() - 1)}}}};
}

RdcModel model_from_json(const json& j) {
    return guarded([&] {
        RdcModel model;
        model.version = j.at("version").get<std::string>();
        if (model.version != kRdcModelVersion) format_error("unsupported model version '" + model.version + "'");
        if (j.at("unit").get<std::string>() != "mm" || j.at("activation").get<std::string>() != "relu") {
            format_error("model must use unit mm and relu activation");
        }
        const json& layers = j.at("layers");
        if (!layers.is_array() || layers.empty()) format_error("model has no layers");
        std::vector<int> sizes{layers.front().at("cols").get<int>()};
        for (const json& l : layers) {
            if (l.at("cols").get<int>() != sizes.back()) format_error("layer shapes do not chain");
            sizes.push_back(l.at("rows").get<int>());
        }
        if (sizes.front() != j.at("k").get<int>() || sizes.back() != sizes.front()) {
            format_error("model input and output width must equal k");
        }
        model.network = Mlp(sizes);
        for (int l = 0; l < model.network.layer_count(); ++l) {
            const auto w = layers[l].at("weights").get<std::vector<double>>();
            const auto b = layers[l].at("bias").get<std::vector<double>>();
            auto dw = model.network.weights(l);
            auto db = model.network.bias(l);
            if (w.size() != dw.size() || b.size() != db.size()) format_error("layer parameter count mismatch");
            std::copy(w.begin(), w.end(), dw.begin());
            std::copy(b.begin(), b.end(), db.begin());
        }
        model.meta.layer_sizes = sizes;
        if (j.contains("train_meta")) {
            const json& m = j.at("train_meta");
            model.meta.adam.learning_rate = m.value("lr", model.meta.adam.learning_rate);
            model.meta.adam.beta1 = m.value("beta1", model.meta.adam.beta1);
            model.meta.adam.beta2 = m.value("beta2", model.meta.adam.beta2);
            model.meta.adam.epsilon = m.value("eps", model.meta.adam.epsilon);
            model.meta.epochs = m.value("epochs", model.meta.epochs);
            model.meta.batch_size = m.value("batch", model.meta.batch_size);
            model.meta.validation_fraction = m.value("validation_fraction", model.meta.validation_fraction);
            model.meta.seed = m.value("seed", model.meta.seed);
        }
        return model;
    });
}

json scene_to_json(const Scene& scene) {
    json bubbles = json::array();
    for (const PlacedBubble& b : scene.bubbles) {
        const BubbleShape& s = b.shape;
        bubbles.push_back({{"id", b.id},
                           {"center", {b.center.row, b.center.col}},
                           {"depth_rank", b.depth_rank},
                           {"volume_mm3", b.volume_mm3},
                           {"radii_mm", s.polygon.radii},
                           {"full_area_px", b.full_area},
                           {"visible_area_px", b.visible_area},
                           {"shape",
                            {{"class", std::string(to_string(s.shape_class))},
                             {"a_mm", s.a},
                             {"b_mm", s.b},
                             {"orientation_rad", s.orientation},
                             {"wobble", s.wobble},
                             {"phase", s.phase},
                             {"equivalent_diameter_mm", s.equivalent_diameter}}}});
    }
    return {{"width", scene.width},
            {"height", scene.height},
            {"mm_per_px", scene.scale.mm_per_px},
            {"depth_mm", scene.depth_mm},
            {"target_alpha", scene.target_alpha},
            {"achieved_alpha", scene.achieved_alpha},
            {"seed", scene.seed},
            {"bubbles", bubbles}};
}

Scene scene_from_json(const json& j) {
    return guarded([&] {
        Scene scene;
        scene.width = j.at("width").get<int>();
        scene.height = j.at("height").get<int>();
        if (scene.width <= 0 || scene.height <= 0) format_error("scene dimensions must be positive");
        scene.scale = PixelScale{j.at("mm_per_px").get<double>()};
        scene.depth_mm = j.at("depth_mm").get<double>();
        scene.target_alpha = j.value("target_alpha", 0.0);
        scene.achieved_alpha = j.value("achieved_alpha", 0.0);
        scene.seed = j.value("seed", std::uint64_t{0});
        for (const json& jb : j.at("bubbles")) {
            const json& s = jb.at("shape");
            const int k = static_cast<int>(jb.at("radii_mm").size());
            PlacedBubble b;
            b.id = jb.at("id").get<Label>();
            b.center = point_from(jb.at("center"));
            b.depth_rank = jb.at("depth_rank").get<int>();
            b.shape = make_shape(shape_class_from_string(s.at("class").get<std::string>()),
                                 s.at("a_mm").get<double>(), s.at("b_mm").get<double>(),
                                 s.at("orientation_rad").get<double>(),
                                 s.at("wobble").get<std::array<double, 3>>(),
                                 s.at("phase").get<std::array<double, 3>>(), k);
            b.volume_mm3 = bubble_volume(b.shape);
            scene.bubbles.push_back(std::move(b));
        }
        rebuild_scene_rasters(scene);
        return scene;
    });
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        format_error(path.string() + ": " + e.what());
    }
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw Error(ErrorKind::Io, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::Io, "cannot rename onto " + path.string());
    }
}

}  // namespace bubbleid::io
