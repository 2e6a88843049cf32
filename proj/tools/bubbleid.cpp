#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bubbleid/ellipse.hpp"
#include "bubbleid/eval.hpp"
#include "bubbleid/fuse.hpp"
#include "bubbleid/io.hpp"
#include "bubbleid/rdc.hpp"
#include "bubbleid/synthgen.hpp"
#include "bubbleid/version.hpp"

using namespace bubbleid;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonFiniteLoss:
        case ErrorKind::InsufficientPoints:
        case ErrorKind::NonEllipseConic:
            return kNumeric;
        default:
            return kData;
    }
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json manifest_header(const std::string& command, const json& config, std::uint64_t seed) {
    return {{"tool", "bubbleid"},
            {"version", kVersion},
            {"command", command},
            {"seed", seed},
            {"config_hash", fnv1a_hex(config.dump())},
            {"config", config}};
}

int default_workers() {
    if (const char* env = std::getenv("BUBBLEID_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return omp_get_max_threads();
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j = io::read_json(path);
    if (!j.is_object()) throw Error(ErrorKind::Format, path + ": config must be a JSON object");
    return j;
}

// Scenes of a generated directory, in manifest order.
struct SceneEntry {
    std::string id;
    double group = 0.0;
};

std::vector<SceneEntry> list_scenes(const fs::path& dir) {
    std::vector<SceneEntry> out;
    if (fs::exists(dir / "manifest.json")) {
        const json m = io::read_json(dir / "manifest.json");
        for (const json& s : m.at("scenes")) out.push_back({s.at("id"), s.value("group", 0.0)});
        return out;
    }
    if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, dir.string() + ": not a directory");
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        const std::string suffix = ".scene.json";
        if (name.size() > suffix.size() && name.ends_with(suffix)) {
            out.push_back({name.substr(0, name.size() - suffix.size()), 0.0});
        }
    }
    std::sort(out.begin(), out.end(), [](const SceneEntry& a, const SceneEntry& b) { return a.id < b.id; });
    return out;
}

Scene load_scene(const fs::path& dir, const std::string& id) {
    return io::scene_from_json(io::read_json(dir / (id + ".scene.json")));
}

std::vector<double> parse_targets(const json& j) {
    std::vector<double> t;
    for (const json& v : j) t.push_back(v.get<double>());
    return t;
}

// gen ---------------------------------------------------------------------

struct GenOptions {
    std::string config_path, out_dir, mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> count, per_target, width, height, count_bubbles;
    std::vector<double> targets;
    bool render = false;
    int workers = 0;
};

int cmd_gen(const GenOptions& o) {
    json cfg = load_config(o.config_path);
    if (!o.mode.empty()) cfg["mode"] = o.mode;
    if (o.seed) cfg["seed"] = *o.seed;
    if (o.count) cfg["count"] = *o.count;
    if (o.per_target) cfg["per_target"] = *o.per_target;
    if (o.width) cfg["width"] = *o.width;
    if (o.height) cfg["height"] = *o.height;
    if (o.count_bubbles) cfg["count_bubbles"] = *o.count_bubbles;
    if (!o.targets.empty()) cfg["targets"] = o.targets;
    if (o.render) cfg["render"] = true;

    const std::string mode = cfg.value("mode", "alpha");
    if (mode != "alpha" && mode != "rdc") throw UsageError("mode must be 'alpha' or 'rdc'");
    const bool alpha = mode == "alpha";
    cfg["mode"] = mode;
    cfg["seed"] = cfg.value("seed", std::uint64_t{1});
    cfg["width"] = cfg.value("width", alpha ? 1024 : 256);
    cfg["height"] = cfg.value("height", alpha ? 1024 : 256);
    cfg["mm_per_px"] = cfg.value("mm_per_px", 0.05);
    cfg["depth_mm"] = cfg.value("depth_mm", 30.0);
    cfg["size_min_mm"] = cfg.value("size_min_mm", 2.0);
    cfg["size_max_mm"] = cfg.value("size_max_mm", 7.0);
    cfg["render"] = cfg.value("render", false);
    if (!cfg.contains("classes")) cfg["classes"] = {"spherical", "ellipsoidal", "wobbling"};
    if (alpha) {
        if (!cfg.contains("targets")) cfg["targets"] = {0.025, 0.05, 0.075, 0.1};
        cfg["per_target"] = cfg.value("per_target", 50);
    } else {
        cfg["count"] = cfg.value("count", 1000);
    }

    SceneConfig sc;
    sc.width = cfg["width"];
    sc.height = cfg["height"];
    sc.scale = PixelScale(cfg["mm_per_px"].get<double>());
    sc.depth_mm = cfg["depth_mm"];
    sc.size = {cfg["size_min_mm"].get<double>(), cfg["size_max_mm"].get<double>()};
    sc.classes.clear();
    for (const json& c : cfg["classes"]) sc.classes.push_back(shape_class_from_string(c.get<std::string>()));
    if (cfg.contains("count_bubbles") && !cfg["count_bubbles"].is_null()) sc.count_bubbles = cfg["count_bubbles"].get<int>();
    const std::uint64_t seed = cfg["seed"];

    struct Job {
        std::string id;
        double target;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    if (alpha) {
        const std::vector<double> targets = parse_targets(cfg["targets"]);
        const int per = cfg["per_target"];
        for (std::size_t g = 0; g < targets.size(); ++g) {
            for (int i = 0; i < per; ++i) {
                char id[64];
                std::snprintf(id, sizeof id, "alpha_%.4f_%03d", targets[g], i);
                jobs.push_back({id, targets[g], derive_seed(seed, g * 1000000 + static_cast<std::uint64_t>(i))});
            }
        }
    } else {
        const int n = cfg["count"];
        for (int i = 0; i < n; ++i) {
            char id[64];
            std::snprintf(id, sizeof id, "rdc_%06d", i);
            jobs.push_back({id, 0.0, derive_seed(seed, static_cast<std::uint64_t>(i))});
        }
    }

    const fs::path out(o.out_dir);
    fs::create_directories(out);
    const bool render_images = cfg["render"];
    std::vector<json> entries(jobs.size());
    std::vector<std::vector<fs::path>> written(jobs.size());
    std::optional<Error> failure;
#pragma omp parallel for schedule(dynamic) num_threads(o.workers)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
        bool stop;
#pragma omp critical(gen_failure)
        stop = failure.has_value();
        if (stop) continue;
        const Job& job = jobs[i];
        try {
            SceneConfig local = sc;
            local.target_alpha = alpha ? job.target : local.target_alpha;
            const Scene scene = alpha ? compose_alpha_scene(local, job.seed) : compose_rdc_scene(local, job.seed);
            const fs::path labels = out / (job.id + ".labels.pgm"), meta = out / (job.id + ".scene.json");
            io::write_label_map(labels, scene.labels);
            written[i].push_back(labels);
            io::write_file_atomic(meta, io::scene_to_json(scene).dump(1) + "\n");
            written[i].push_back(meta);
            if (render_images) {
                RenderStyle style;
                style.seed = derive_seed(job.seed, 1);
                const fs::path img = out / (job.id + ".image.pgm");
                io::write_gray(img, render(scene, style));
                written[i].push_back(img);
            }
            entries[i] = {{"id", job.id},
                          {"group", job.target},
                          {"seed", job.seed},
                          {"bubbles", scene.bubbles.size()},
                          {"achieved_alpha", scene.achieved_alpha}};
        } catch (const Error& e) {
#pragma omp critical(gen_failure)
            if (!failure) failure = e;
        }
    }
    if (failure) {
        for (const auto& files : written) {
            for (const fs::path& p : files) fs::remove(p);
        }
        throw *failure;
    }
    json manifest = manifest_header("gen", cfg, seed);
    manifest["scenes"] = entries;
    io::write_file_atomic(out / "manifest.json", manifest.dump(1) + "\n");
    std::cout << "wrote " << jobs.size() << " scenes to " << out.string() << "\n";
    std::map<double, std::vector<double>> by_group;
    for (const json& e : entries) by_group[e["group"]].push_back(e["achieved_alpha"]);
    if (alpha) {
        for (const auto& [g, v] : by_group) {
            const Summary s = summarize(v);
            std::printf("target %.4f: %zu scenes, achieved alpha mean %.5f sd %.5f\n", g, v.size(), s.mean, s.sd);
        }
    }
    return kOk;
}

// train-rdc ------------------------------------------------------------------

struct TrainOptions {
    std::string config_path, scenes_dir, out, loss_csv;
    std::optional<int> epochs, batch;
    std::optional<double> lr, validation_fraction;
    std::optional<std::uint64_t> seed;
    int workers = 0;
};

int cmd_train_rdc(const TrainOptions& o) {
    json cfg = load_config(o.config_path);
    if (o.epochs) cfg["epochs"] = *o.epochs;
    if (o.batch) cfg["batch_size"] = *o.batch;
    if (o.lr) cfg["learning_rate"] = *o.lr;
    if (o.validation_fraction) cfg["validation_fraction"] = *o.validation_fraction;
    if (o.seed) cfg["seed"] = *o.seed;

    TrainConfig tc;
    tc.epochs = cfg.value("epochs", tc.epochs);
    tc.batch_size = cfg.value("batch_size", tc.batch_size);
    tc.adam.learning_rate = cfg.value("learning_rate", tc.adam.learning_rate);
    tc.adam.beta1 = cfg.value("beta1", tc.adam.beta1);
    tc.adam.beta2 = cfg.value("beta2", tc.adam.beta2);
    tc.adam.epsilon = cfg.value("epsilon", tc.adam.epsilon);
    tc.validation_fraction = cfg.value("validation_fraction", tc.validation_fraction);
    tc.seed = cfg.value("seed", tc.seed);
    if (cfg.contains("layer_sizes")) tc.layer_sizes = cfg["layer_sizes"].get<std::vector<int>>();
    const std::size_t max_samples = cfg.value("max_samples", std::size_t{0});
    cfg["epochs"] = tc.epochs;
    cfg["batch_size"] = tc.batch_size;
    cfg["learning_rate"] = tc.adam.learning_rate;
    cfg["validation_fraction"] = tc.validation_fraction;
    cfg["seed"] = tc.seed;
    omp_set_num_threads(o.workers);

    const fs::path dir(o.scenes_dir);
    std::vector<RdcSample> samples;
    std::size_t skipped = 0, scenes = 0;
    for (const SceneEntry& e : list_scenes(dir)) {
        ExtractResult r = extract_samples(load_scene(dir, e.id));
        skipped += r.skipped;
        ++scenes;
        for (RdcSample& s : r.samples) samples.push_back(std::move(s));
        if (max_samples && samples.size() >= max_samples) break;
    }
    if (max_samples && samples.size() > max_samples) samples.resize(max_samples);
    std::printf("%zu samples from %zu scenes (%zu bubbles without a visible segment)\n", samples.size(), scenes, skipped);

    const TrainResult r = train(samples, tc);
    json model = io::model_to_json(r.model);
    io::write_file_atomic(o.out, model.dump() + "\n");
    std::ostringstream csv;
    csv << "epoch,train_mse,validation_mse\n";
    csv.precision(10);
    for (const EpochLoss& e : r.history) csv << e.epoch << ',' << e.train << ',' << e.validation << '\n';
    const std::string loss = o.loss_csv.empty() ? o.out + ".loss.csv" : o.loss_csv;
    io::write_file_atomic(loss, csv.str());
    json manifest = manifest_header("train-rdc", cfg, tc.seed);
    manifest["scenes"] = scenes;
    manifest["samples"] = samples.size();
    manifest["train_count"] = r.train_count;
    manifest["validation_count"] = r.validation_count;
    manifest["model"] = o.out;
    manifest["loss_csv"] = loss;
    io::write_file_atomic(o.out + ".manifest.json", manifest.dump(1) + "\n");
    if (!r.history.empty()) {
        std::printf("trained on %zu, validated on %zu; final train MSE %.6f, validation MSE %.6f\n", r.train_count,
                    r.validation_count, r.history.back().train, r.history.back().validation);
    }
    return kOk;
}

// reconstruct -------------------------------------------------------------

struct ReconstructOptions {
    std::string input, method, model, out, substitution = "occluded";
    double mm_per_px = 0.05;
    int workers = 0;
};

struct ReconstructStats {
    std::size_t instances = 0, fallbacks = 0, exhausted = 0, skipped = 0;
};

std::string reconstruct_map(const LabelMap& labels, const PixelScale& scale, const std::string& method,
                            const RdcModel* model, Substitution mode, ReconstructStats& stats) {
    std::string out;
    for (Label id : instance_ids(labels)) {
        try {
            if (method == "ellipse") {
                const EllipseReconstruction rec = reconstruct_ellipse(labels, id);
                stats.fallbacks += rec.fallback;
                stats.exhausted += rec.fallback_exhausted;
                out += io::to_json(io::EllipseRecord{id, rec.ellipse, rec.fallback}).dump() + '\n';
            } else {
                const StarPolygon poly =
                    method == "rdc" ? correct_polygon(*model, labels, id, scale, mode)
                                    : radial_distances(labels, segment_center(labels, id), id, kRayCount).to_mm(scale);
                out += io::to_json(io::PolygonRecord{id, poly}).dump() + '\n';
            }
            ++stats.instances;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateSegment) throw;
            ++stats.skipped;
        }
    }
    return out;
}

int cmd_reconstruct(const ReconstructOptions& o) {
    if (o.method != "none" && o.method != "rdc" && o.method != "ellipse") {
        throw UsageError("method must be none, rdc or ellipse");
    }
    if (o.method == "rdc" && o.model.empty()) throw UsageError("--model is required for method rdc");
    std::optional<RdcModel> model;
    if (o.method == "rdc") model = io::model_from_json(io::read_json(o.model));
    const Substitution mode = o.substitution == "all" ? Substitution::all_rays : Substitution::occluded_only;
    if (o.substitution != "all" && o.substitution != "occluded") throw UsageError("substitution must be occluded or all");
    json cfg = {{"method", o.method}, {"model", o.model}, {"substitution", o.substitution}, {"mm_per_px", o.mm_per_px}};
    const RdcModel* mp = model ? &*model : nullptr;

    ReconstructStats stats;
    const fs::path in(o.input), out(o.out);
    json manifest = manifest_header("reconstruct", cfg, model ? model->meta.seed : 0);
    if (fs::is_directory(in)) {
        fs::create_directories(out);
        const std::vector<SceneEntry> scenes = list_scenes(in);
        std::vector<ReconstructStats> per(scenes.size());
        std::optional<Error> failure;
#pragma omp parallel for schedule(dynamic) num_threads(o.workers)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(scenes.size()); ++i) {
            try {
                const std::string& id = scenes[i].id;
                PixelScale scale(o.mm_per_px);
                if (fs::exists(in / (id + ".scene.json"))) {
                    scale = PixelScale(io::read_json(in / (id + ".scene.json")).at("mm_per_px").get<double>());
                }
                const LabelMap labels = io::read_label_map(in / (id + ".labels.pgm"));
                io::write_file_atomic(out / (id + "." + o.method + ".jsonl"),
                                      reconstruct_map(labels, scale, o.method, mp, mode, per[i]));
            } catch (const Error& e) {
#pragma omp critical(reconstruct_failure)
                if (!failure) failure = e;
            }
        }
        if (failure) throw *failure;
        for (const ReconstructStats& s : per) {
            stats.instances += s.instances;
            stats.fallbacks += s.fallbacks;
            stats.exhausted += s.exhausted;
            stats.skipped += s.skipped;
        }
        manifest["images"] = scenes.size();
    } else {
        const LabelMap labels = io::read_label_map(in);
        io::write_file_atomic(out, reconstruct_map(labels, PixelScale(o.mm_per_px), o.method, mp, mode, stats));
        manifest["images"] = 1;
    }
    manifest["instances"] = stats.instances;
    manifest["skipped_degenerate"] = stats.skipped;
    if (o.method == "ellipse") {
        manifest["fallbacks"] = stats.fallbacks;
        manifest["fallbacks_exhausted"] = stats.exhausted;
    }
    const fs::path mpath = fs::is_directory(out) ? out / ("manifest." + o.method + ".json") : fs::path(o.out + ".manifest.json");
    io::write_file_atomic(mpath, manifest.dump(1) + "\n");
    std::printf("%zu instances reconstructed (%zu skipped)", stats.instances, stats.skipped);
    if (o.method == "ellipse") std::printf(", %zu fallbacks", stats.fallbacks);
    std::printf("\n");
    return kOk;
}

// fuse / weightmap ----------------------------------------------------------

int cmd_fuse(const std::string& seeds_path, const std::string& fg_path, const std::string& out) {
    const LabelMap seeds = io::read_label_map(seeds_path);
    const Mask fg = io::read_mask(fg_path);
    const GrowResult g = grow_instances(seeds, fg);
    io::write_label_map(out, g.labels);
    json diag = manifest_header("fuse", {{"seeds", seeds_path}, {"foreground", fg_path}}, 0);
    diag["unreached_foreground_pixels"] = g.unreached;
    diag["instances"] = instance_ids(g.labels).size();
    diag["width"] = g.labels.width();
    diag["height"] = g.labels.height();
    io::write_file_atomic(out + ".json", diag.dump(1) + "\n");
    std::printf("%zu instances, %zu unreached foreground pixels\n", instance_ids(g.labels).size(), g.unreached);
    return kOk;
}

int cmd_weightmap(const std::string& labels_path, const std::string& out, double threshold) {
    const LabelMap labels = io::read_label_map(labels_path);
    json meta = manifest_header("weightmap", {{"labels", labels_path}, {"d_threshold", threshold}}, 0);
    meta["d_threshold"] = threshold;
    io::write_weight_map(out, weight_map(labels, threshold), meta);
    return kOk;
}

// eval ----------------------------------------------------------------------

struct EvalOptions {
    std::string gt_dir, pred_dir, pred_labels_dir, out_dir, matching = "greedy";
    double bin_width = 0.25;
};

std::vector<double> record_areas_mm2(const fs::path& file, const std::string& method, const PixelScale& scale) {
    std::vector<double> areas;
    for (const json& j : io::parse_json_lines(io::read_file(file))) {
        if (method == "ellipse") {
            areas.push_back(scale.area_to_mm2(io::ellipse_record(j).ellipse.area()));
        } else {
            areas.push_back(io::polygon_record(j).polygon.to_mm(scale).area());
        }
    }
    return areas;
}

int cmd_eval(const EvalOptions& o) {
    if (o.matching != "greedy" && o.matching != "optimal") throw UsageError("matching must be greedy or optimal");
    const Matching matching = o.matching == "optimal" ? Matching::optimal : Matching::greedy;
    const fs::path gt(o.gt_dir), out(o.out_dir);
    const std::vector<SceneEntry> scenes = list_scenes(gt);
    std::set<std::string> ids;
    for (const SceneEntry& s : scenes) ids.insert(s.id);

    // methods present in the prediction directory, and the ids they cover
    std::map<std::string, std::set<std::string>> covered;
    std::vector<std::string> problems;
    if (!o.pred_dir.empty()) {
        for (const auto& e : fs::directory_iterator(o.pred_dir)) {
            const std::string name = e.path().filename().string();
            for (const std::string m : {"rdc", "ellipse", "none"}) {
                const std::string suffix = "." + m + ".jsonl";
                if (name.size() > suffix.size() && name.ends_with(suffix)) {
                    const std::string id = name.substr(0, name.size() - suffix.size());
                    covered[m].insert(id);
                    if (!ids.count(id)) problems.push_back(name + ": no ground-truth scene " + id);
                }
            }
        }
        for (const auto& [m, have] : covered) {
            for (const std::string& id : ids) {
                if (!have.count(id)) problems.push_back(id + ": missing " + m + " records");
            }
        }
    }
    if (!o.pred_labels_dir.empty()) {
        for (const std::string& id : ids) {
            if (!fs::exists(fs::path(o.pred_labels_dir) / (id + ".labels.pgm"))) {
                problems.push_back(id + ": missing predicted label map");
            }
        }
    }
    if (!problems.empty()) {
        for (const std::string& p : problems) std::cerr << "id mismatch: " << p << "\n";
        return kData;
    }

    EvalReport report;
    report.thresholds = default_iou_thresholds();
    std::map<std::string, std::vector<double>> hist_areas;
    for (const SceneEntry& entry : scenes) {
        const Scene scene = load_scene(gt, entry.id);
        const Domain domain{scene.width, scene.height, scene.scale, scene.depth_mm};
        const LabelMap pred = o.pred_labels_dir.empty()
                                  ? scene.labels
                                  : io::read_label_map(fs::path(o.pred_labels_dir) / (entry.id + ".labels.pgm"));
        ImageEval img;
        img.image_id = entry.id;
        img.group = scene.target_alpha;
        img.alpha_ref = scene.achieved_alpha;
        const std::vector<double> raw = instance_areas_mm2(pred, scene.scale);
        img.alpha_raw = gas_fraction(raw, domain);
        img.ap = average_precision_curve(pred, scene.labels, report.thresholds, matching);
        for (const PlacedBubble& b : scene.bubbles) {
            hist_areas["reference"].push_back(scene.scale.area_to_mm2(static_cast<double>(b.full_area)));
        }
        hist_areas["raw"].insert(hist_areas["raw"].end(), raw.begin(), raw.end());
        for (const std::string m : {"rdc", "ellipse"}) {
            if (!covered.count(m)) continue;
            const auto a = record_areas_mm2(fs::path(o.pred_dir) / (entry.id + "." + m + ".jsonl"), m, scene.scale);
            (m == "rdc" ? img.alpha_rdc : img.alpha_ellipse) = gas_fraction(a, domain);
            hist_areas[m].insert(hist_areas[m].end(), a.begin(), a.end());
        }
        report.images.push_back(std::move(img));
    }
    for (const auto& [name, areas] : hist_areas) report.histograms[name] = size_histogram(areas, o.bin_width);

    fs::create_directories(out);
    std::ostringstream images, groups;
    report.write_images_csv(images);
    report.write_groups_csv(groups);
    io::write_file_atomic(out / "images.csv", images.str());
    io::write_file_atomic(out / "groups.csv", groups.str());
    io::write_file_atomic(out / "summary.json", report.summary_json() + "\n");
    for (const auto& [name, h] : report.histograms) {
        std::ostringstream hs;
        write_histogram_csv(hs, h);
        io::write_file_atomic(out / ("histogram_" + name + ".csv"), hs.str());
    }
    json cfg = {{"gt", o.gt_dir},
                {"pred", o.pred_dir},
                {"pred_labels", o.pred_labels_dir},
                {"bin_width_mm", o.bin_width},
                {"matching", o.matching}};
    json manifest = manifest_header("eval", cfg, 0);
    manifest["images"] = report.images.size();
    manifest["segmentation"] = o.pred_labels_dir.empty() ? "ideal" : "predicted";
    io::write_file_atomic(out / "manifest.json", manifest.dump(1) + "\n");

    for (const GroupEval& g : report.groups()) {
        std::printf("group %.4f: %zu images, alpha_rel_error raw %.4f", g.group, g.images,
                    g.rel_raw ? g.rel_raw->mean : 0.0);
        if (g.rel_rdc) std::printf(", rdc %.4f", g.rel_rdc->mean);
        if (g.rel_ellipse) std::printf(", ellipse %.4f", g.rel_ellipse->mean);
        std::printf("\n");
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bubble instance reconstruction toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    GenOptions gen;
    gen.workers = default_workers();
    auto* g = app.add_subcommand("gen", "Generate synthetic scenes");
    g->add_option("--config", gen.config_path, "JSON config file")->check(CLI::ExistingFile);
    g->add_option("--out", gen.out_dir, "Output directory")->required();
    g->add_option("--mode", gen.mode, "alpha or rdc");
    g->add_option("--seed", gen.seed, "Master seed");
    g->add_option("--count", gen.count, "Number of rdc scenes");
    g->add_option("--count-bubbles", gen.count_bubbles, "Bubbles per rdc scene (2 or 3, random when unset)");
    g->add_option("--targets", gen.targets, "Gas fraction targets")->delimiter(',');
    g->add_option("--per-target", gen.per_target, "Scenes per gas fraction target");
    g->add_option("--width", gen.width, "Canvas width in px");
    g->add_option("--height", gen.height, "Canvas height in px");
    g->add_flag("--render", gen.render, "Also write rendered grayscale images");
    g->add_option("--workers", gen.workers, "Worker threads (default: BUBBLEID_WORKERS or all cores)");

    TrainOptions tr;
    tr.workers = default_workers();
    auto* t = app.add_subcommand("train-rdc", "Train the radial distance correction model");
    t->add_option("--scenes", tr.scenes_dir, "Directory written by gen")->required()->check(CLI::ExistingDirectory);
    t->add_option("--config", tr.config_path, "JSON training config")->check(CLI::ExistingFile);
    t->add_option("--out", tr.out, "Model JSON path")->required();
    t->add_option("--loss-csv", tr.loss_csv, "Per-epoch loss CSV (default: <out>.loss.csv)");
    t->add_option("--epochs", tr.epochs);
    t->add_option("--batch", tr.batch, "Mini-batch size; 0 trains full-batch");
    t->add_option("--lr", tr.lr, "Adam learning rate");
    t->add_option("--validation-fraction", tr.validation_fraction);
    t->add_option("--seed", tr.seed);
    t->add_option("--workers", tr.workers);

    ReconstructOptions rc;
    rc.workers = default_workers();
    auto* r = app.add_subcommand("reconstruct", "Reconstruct full bubble outlines from a label map");
    r->add_option("--input", rc.input, "Label map PGM, or a scene directory")->required()->check(CLI::ExistingPath);
    r->add_option("--method", rc.method, "none, rdc or ellipse")->required();
    r->add_option("--model", rc.model, "RDC model JSON (required for rdc)");
    r->add_option("--out", rc.out, "JSON-lines file, or directory for directory input")->required();
    r->add_option("--mm-per-px", rc.mm_per_px, "Pixel size for single label maps")->check(CLI::PositiveNumber);
    r->add_option("--substitution", rc.substitution, "occluded (default) or all");
    r->add_option("--workers", rc.workers);

    std::string seeds_path, fg_path, fuse_out;
    auto* f = app.add_subcommand("fuse", "Grow seed instances into a foreground mask");
    f->add_option("--seeds", seeds_path, "Seed label map PGM")->required()->check(CLI::ExistingFile);
    f->add_option("--foreground", fg_path, "Foreground mask PGM")->required()->check(CLI::ExistingFile);
    f->add_option("--out", fuse_out, "Fused label map PGM")->required();

    std::string wm_labels, wm_out;
    double wm_threshold = kWeightMapThreshold;
    auto* w = app.add_subcommand("weightmap", "Write the loss weight map of a label map");
    w->add_option("--labels", wm_labels)->required()->check(CLI::ExistingFile);
    w->add_option("--out", wm_out)->required();
    w->add_option("--threshold", wm_threshold, "Distance threshold in px")->check(CLI::PositiveNumber);

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Evaluate reconstructions against generated scenes");
    e->add_option("--gt", ev.gt_dir, "Scene directory written by gen")->required()->check(CLI::ExistingDirectory);
    e->add_option("--pred", ev.pred_dir, "Directory of reconstruct outputs")->check(CLI::ExistingDirectory);
    e->add_option("--pred-labels", ev.pred_labels_dir, "Directory of predicted <id>.labels.pgm (default: ideal)")
        ->check(CLI::ExistingDirectory);
    e->add_option("--out", ev.out_dir, "Report directory")->required();
    e->add_option("--bin-width", ev.bin_width, "Histogram bin width in mm")->check(CLI::PositiveNumber);
    e->add_option("--matching", ev.matching, "greedy or optimal");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? kOk : kUsage;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*t) return cmd_train_rdc(tr);
        if (*r) return cmd_reconstruct(rc);
        if (*f) return cmd_fuse(seeds_path, fg_path, fuse_out);
        if (*w) return cmd_weightmap(wm_labels, wm_out, wm_threshold);
        if (*e) return cmd_eval(ev);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return kUsage;
    } catch (const Error& err) {
        std::cerr << "error (" << to_string(err.kind()) << "): " << err.what() << "\n";
        return exit_code(err.kind());
    } catch (const nlohmann::json::exception& err) {
        std::cerr << "error (Format): " << err.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "error (Io): " << err.what() << "\n";
        return kData;
    }
    return kUsage;
}
