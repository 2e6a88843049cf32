#include "bubbleid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bubbleid/synthgen.hpp"

namespace bubbleid {

double OverlapTable::iou(Label pred, Label gt) const {
    const auto it = intersection.find({pred, gt});
    if (it == intersection.end()) return 0.0;
    const double inter = static_cast<double>(it->second);
    return inter / (static_cast<double>(pred_area.at(pred) + gt_area.at(gt)) - inter);
}

OverlapTable overlap_table(const LabelMap& pred, const LabelMap& gt) {
    if (!pred.same_shape(gt)) throw Error(ErrorKind::DimensionMismatch, "prediction and ground truth sizes differ");
    OverlapTable t;
    const auto p = pred.pixels();
    const auto g = gt.pixels();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] != 0) ++t.pred_area[p[i]];
        if (g[i] != 0) ++t.gt_area[g[i]];
        if (p[i] != 0 && g[i] != 0) ++t.intersection[{p[i], g[i]}];
    }
    for (const auto& kv : t.pred_area) t.pred_ids.push_back(kv.first);
    for (const auto& kv : t.gt_area) t.gt_ids.push_back(kv.first);
    return t;
}

namespace {

std::vector<MatchPair> candidates(const OverlapTable& table, double threshold) {
    std::vector<MatchPair> out;
    for (const auto& [key, count] : table.intersection) {
        const double v = table.iou(key.first, key.second);
        if (v >= threshold) out.push_back({key.first, key.second, v});
    }
    return out;
}

std::vector<MatchPair> greedy(std::vector<MatchPair> cand) {
    std::sort(cand.begin(), cand.end(), [](const MatchPair& a, const MatchPair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });
    std::set<Label> used_pred, used_gt;
    std::vector<MatchPair> pairs;
    for (const MatchPair& m : cand) {
        if (used_pred.count(m.pred) || used_gt.count(m.gt)) continue;
        used_pred.insert(m.pred);
        used_gt.insert(m.gt);
        pairs.push_back(m);
    }
    return pairs;
}

// Kuhn's augmenting paths over the candidate edges.
std::vector<MatchPair> maximum_matching(const std::vector<MatchPair>& cand) {
    std::map<Label, std::vector<std::size_t>> edges;  // pred -> candidate indices
    for (std::size_t i = 0; i < cand.size(); ++i) edges[cand[i].pred].push_back(i);
    std::map<Label, std::size_t> owner;  // gt -> candidate index
    std::function<bool(Label, std::set<Label>&)> augment = [&](Label pred, std::set<Label>& seen) {
        for (std::size_t e : edges[pred]) {
            const Label gt = cand[e].gt;
            if (!seen.insert(gt).second) continue;
            const auto it = owner.find(gt);
            if (it == owner.end() || augment(cand[it->second].pred, seen)) {
                owner[gt] = e;
                return true;
            }
        }
        return false;
    };
    for (const auto& kv : edges) {
        std::set<Label> seen;
        augment(kv.first, seen);
    }
    std::vector<MatchPair> pairs;
    for (const auto& kv : owner) pairs.push_back(cand[kv.second]);
    return pairs;
}

}  // namespace

MatchResult match_instances(const OverlapTable& table, double threshold, Matching mode) {
    MatchResult r;
    r.threshold = threshold;
    std::vector<MatchPair> cand = candidates(table, threshold);
    r.pairs = mode == Matching::greedy ? greedy(std::move(cand)) : maximum_matching(cand);
    r.tp = r.pairs.size();
    r.fp = table.pred_ids.size() - r.tp;
    r.fn = table.gt_ids.size() - r.tp;
    return r;
}

MatchResult match_instances(const LabelMap& pred, const LabelMap& gt, double threshold, Matching mode) {
    return match_instances(overlap_table(pred, gt), threshold, mode);
}

double average_precision(const MatchResult& m) {
    const std::size_t denom = m.tp + m.fp + m.fn;
    return denom == 0 ? 1.0 : static_cast<double>(m.tp) / static_cast<double>(denom);
}

std::vector<double> default_iou_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 8; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

std::vector<double> average_precision_curve(const LabelMap& pred, const LabelMap& gt,
                                            std::span<const double> thresholds, Matching mode) {
    const OverlapTable table = overlap_table(pred, gt);
    std::vector<double> ap;
    for (double t : thresholds) ap.push_back(average_precision(match_instances(table, t, mode)));
    return ap;
}

double equivalent_diameter(double area_mm2) noexcept {
    return area_mm2 > 0 ? 2.0 * std::sqrt(area_mm2 / std::numbers::pi) : 0.0;
}

std::size_t Histogram::total() const noexcept {
    std::size_t n = 0;
    for (std::size_t c : counts) n += c;
    return n;
}

Histogram size_histogram(std::span<const double> areas_mm2, double bin_width_mm) {
    if (!(bin_width_mm > 0)) throw Error(ErrorKind::InvalidRange, "bin width must be > 0");
    Histogram h;
    h.bin_width_mm = bin_width_mm;
    for (double a : areas_mm2) {
        const auto bin = static_cast<std::size_t>(std::floor(equivalent_diameter(a) / bin_width_mm));
        if (h.counts.size() <= bin) h.counts.resize(bin + 1, 0);
        ++h.counts[bin];
    }
    return h;
}

std::vector<double> instance_areas_mm2(const LabelMap& labels, const PixelScale& scale) {
    const std::vector<std::size_t> areas = instance_areas(labels);
    std::vector<double> out;
    for (std::size_t id = 1; id < areas.size(); ++id) {
        if (areas[id] > 0) out.push_back(scale.area_to_mm2(static_cast<double>(areas[id])));
    }
    return out;
}

double gas_fraction(std::span<const double> areas_mm2, const Domain& domain) {
    if (!(domain.depth_mm > 0)) throw Error(ErrorKind::InvalidRange, "depth must be > 0");
    double volume = 0.0;
    for (double a : areas_mm2) volume += equivalent_sphere_volume(a);
    return volume / domain.volume_mm3();
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<GroupEval> EvalReport::groups() const {
    std::map<double, std::vector<const ImageEval*>> by_group;
    for (const ImageEval& im : images) by_group[im.group].push_back(&im);
    std::vector<GroupEval> out;
    for (const auto& [group, members] : by_group) {
        GroupEval g;
        g.group = group;
        g.images = members.size();
        std::vector<double> ref, raw, rdc, ell;
        for (const ImageEval* im : members) {
            ref.push_back(im->alpha_ref);
            if (im->alpha_raw) raw.push_back(*im->alpha_raw / im->alpha_ref);
            if (im->alpha_rdc) rdc.push_back(*im->alpha_rdc / im->alpha_ref);
            if (im->alpha_ellipse) ell.push_back(*im->alpha_ellipse / im->alpha_ref);
        }
        g.alpha_ref = summarize(ref);
        if (!raw.empty()) g.rel_raw = summarize(raw);
        if (!rdc.empty()) g.rel_rdc = summarize(rdc);
        if (!ell.empty()) g.rel_ellipse = summarize(ell);
        for (std::size_t t = 0; t < thresholds.size(); ++t) {
            std::vector<double> ap;
            for (const ImageEval* im : members) {
                if (t < im->ap.size()) ap.push_back(im->ap[t]);
            }
            g.ap.push_back(summarize(ap));
        }
        out.push_back(std::move(g));
    }
    return out;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string threshold_tag(double t) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << t;
    return os.str();
}

}  // namespace

void EvalReport::write_images_csv(std::ostream& os) const {
    os << "image_id,group,alpha_ref,alpha_pred_raw,alpha_pred_rdc,alpha_pred_ellipse";
    for (double t : thresholds) os << ",ap@" << threshold_tag(t);
    os << '\n';
    for (const ImageEval& im : images) {
        os << im.image_id << ',' << fmt(im.group) << ',' << fmt(im.alpha_ref) << ',' << fmt(im.alpha_raw)
           << ',' << fmt(im.alpha_rdc) << ',' << fmt(im.alpha_ellipse);
        for (double ap : im.ap) os << ',' << fmt(ap);
        os << '\n';
    }
}

void EvalReport::write_groups_csv(std::ostream& os) const {
    os << "group,images,alpha_ref_mean,alpha_ref_sd,rel_raw_mean,rel_raw_sd,rel_rdc_mean,rel_rdc_sd,"
          "rel_ellipse_mean,rel_ellipse_sd";
    for (double t : thresholds) os << ",ap@" << threshold_tag(t) << "_mean,ap@" << threshold_tag(t) << "_sd";
    os << '\n';
    const auto opt = [](const std::optional<Summary>& s) {
        return s ? fmt(s->mean) + ',' + fmt(s->sd) : std::string(",");
    };
    for (const GroupEval& g : groups()) {
        os << fmt(g.group) << ',' << g.images << ',' << fmt(g.alpha_ref.mean) << ',' << fmt(g.alpha_ref.sd)
           << ',' << opt(g.rel_raw) << ',' << opt(g.rel_rdc) << ',' << opt(g.rel_ellipse);
        for (const Summary& s : g.ap) os << ',' << fmt(s.mean) << ',' << fmt(s.sd);
        os << '\n';
    }
}

std::string EvalReport::summary_json() const {
    nlohmann::json j;
    j["thresholds"] = thresholds;
    j["images"] = images.size();
    nlohmann::json groups_json = nlohmann::json::array();
    const auto put = [](nlohmann::json& dst, const char* key, const std::optional<Summary>& s) {
        if (s) dst[key] = {{"mean", s->mean}, {"sd", s->sd}};
    };
    for (const GroupEval& g : groups()) {
        nlohmann::json gj;
        gj["group"] = g.group;
        gj["images"] = g.images;
        gj["alpha_ref"] = {{"mean", g.alpha_ref.mean}, {"sd", g.alpha_ref.sd}};
        put(gj, "alpha_rel_error_raw", g.rel_raw);
        put(gj, "alpha_rel_error_rdc", g.rel_rdc);
        put(gj, "alpha_rel_error_ellipse", g.rel_ellipse);
        nlohmann::json ap = nlohmann::json::array();
        for (const Summary& s : g.ap) ap.push_back({{"mean", s.mean}, {"sd", s.sd}});
        gj["ap"] = ap;
        groups_json.push_back(gj);
    }
    j["groups"] = groups_json;
    nlohmann::json hist;
    for (const auto& [name, h] : histograms) {
        hist[name] = {{"bin_width_mm", h.bin_width_mm}, {"counts", h.counts}};
    }
    j["histograms"] = hist;
    return j.dump(2);
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
    os << "bin_left_mm,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) os << fmt(h.bin_left(i)) << ',' << h.counts[i] << '\n';
}

}  // namespace bubbleid
