#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bubbleid/ellipse.hpp"
#include "bubbleid/geometry.hpp"
#include "bubbleid/rdc.hpp"
#include "bubbleid/synthgen.hpp"

namespace bubbleid::io {

namespace fs = std::filesystem;
using nlohmann::json;

// Binary PGM ("P5"). 16-bit samples are big-endian.
struct Pgm {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> samples;
};

Pgm parse_pgm(const std::string& bytes);
std::string encode_pgm(const Pgm& pgm);

/// Label maps use maxval 65535; 8-bit files are accepted when reading.
LabelMap read_label_map(const fs::path& path);
void write_label_map(const fs::path& path, const LabelMap& labels);
LabelMap decode_label_map(const std::string& bytes);
std::string encode_label_map(const LabelMap& labels);

/// Any nonzero sample counts as foreground.
Mask read_mask(const fs::path& path);

void write_gray(const fs::path& path, const Raster<std::uint8_t>& image);
std::string encode_gray(const Raster<std::uint8_t>& image);

// 32-bit float raster: "BUBWMAP1", uint32 width, uint32 height (little
// endian), then row-major little-endian float32 samples.
inline constexpr char kWeightMagic[9] = "BUBWMAP1";
std::string encode_weight_map(const Raster<float>& weights);
Raster<float> decode_weight_map(const std::string& bytes);
/// Writes the raster and `<path>.json` with `meta` plus dimensions.
void write_weight_map(const fs::path& path, const Raster<float>& weights, json meta);
Raster<float> read_weight_map(const fs::path& path);

struct PolygonRecord {
    Label id = 0;
    StarPolygon polygon;
};

struct EllipseRecord {
    Label id = 0;
    Ellipse ellipse;
    bool fallback = false;
};

json to_json(const PolygonRecord& r);
json to_json(const EllipseRecord& r);
PolygonRecord polygon_record(const json& j);
EllipseRecord ellipse_record(const json& j);

/// Parses one JSON document per non-empty line.
std::vector<json> parse_json_lines(const std::string& text);
template <class Record>
std::string encode_json_lines(const std::vector<Record>& records) {
    std::string out;
    for (const Record& r : records) out += to_json(r).dump() + '\n';
    return out;
}

json model_to_json(const RdcModel& model);
RdcModel model_from_json(const json& j);

json scene_to_json(const Scene& scene);
/// Recreates shapes from their parameters and rebuilds all masks.
Scene scene_from_json(const json& j);

std::string read_file(const fs::path& path);
json read_json(const fs::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& bytes);

}  // namespace bubbleid::io
