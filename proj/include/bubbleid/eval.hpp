#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bubbleid/raster.hpp"

namespace bubbleid {

/// Pixel overlap counts between the instances of two label maps.
struct OverlapTable {
    std::vector<Label> pred_ids;
    std::vector<Label> gt_ids;
    std::map<Label, std::size_t> pred_area;
    std::map<Label, std::size_t> gt_area;
    std::map<std::pair<Label, Label>, std::size_t> intersection;  // (pred, gt)

    double iou(Label pred, Label gt) const;
};

OverlapTable overlap_table(const LabelMap& pred, const LabelMap& gt);

struct MatchPair {
    Label pred = 0;
    Label gt = 0;
    double iou = 0.0;
};

struct MatchResult {
    double threshold = 0.5;
    std::vector<MatchPair> pairs;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

enum class Matching {
    greedy,   // descending IoU, ties by lower pred id then lower gt id
    optimal,  // maximum number of matched pairs
};

MatchResult match_instances(const OverlapTable& table, double threshold, Matching mode = Matching::greedy);
MatchResult match_instances(const LabelMap& pred, const LabelMap& gt, double threshold,
                            Matching mode = Matching::greedy);

/// TP / (TP + FP + FN); 1 when the image and the prediction are both empty.
double average_precision(const MatchResult& match);

/// 0.50, 0.55, ..., 0.90
std::vector<double> default_iou_thresholds();

std::vector<double> average_precision_curve(const LabelMap& pred, const LabelMap& gt,
                                            std::span<const double> thresholds,
                                            Matching mode = Matching::greedy);
inline std::vector<double> average_precision_curve(const LabelMap& pred, const LabelMap& gt) {
    return average_precision_curve(pred, gt, default_iou_thresholds());
}

double equivalent_diameter(double area_mm2) noexcept;

/// Counts of equivalent diameters in fixed-width bins starting at 0.
struct Histogram {
    double bin_width_mm = 0.5;
    std::vector<std::size_t> counts;

    std::size_t total() const noexcept;
    double bin_left(std::size_t i) const noexcept { return bin_width_mm * static_cast<double>(i); }
};

Histogram size_histogram(std::span<const double> areas_mm2, double bin_width_mm);

/// Per-instance areas (mm^2) of a label map.
std::vector<double> instance_areas_mm2(const LabelMap& labels, const PixelScale& scale);

/// Imaged measurement volume: canvas extent times depth.
struct Domain {
    int width = 0;
    int height = 0;
    PixelScale scale;
    double depth_mm = 30.0;

    double volume_mm3() const noexcept {
        return scale.to_mm(width) * scale.to_mm(height) * depth_mm;
    }
};

/// Gas volume fraction of instances given by their projected areas, each
/// converted to the sphere of equal projected area.
double gas_fraction(std::span<const double> areas_mm2, const Domain& domain);

inline double alpha_rel_error(double predicted, double reference) { return predicted / reference; }

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation (n - 1)
};

Summary summarize(std::span<const double> values);

/// One row of the per-image evaluation report.
struct ImageEval {
    std::string image_id;
    double group = 0.0;  // e.g. target gas fraction
    double alpha_ref = 0.0;
    std::optional<double> alpha_raw;
    std::optional<double> alpha_rdc;
    std::optional<double> alpha_ellipse;
    std::vector<double> ap;  // per threshold
};

struct GroupEval {
    double group = 0.0;
    std::size_t images = 0;
    Summary alpha_ref;
    std::optional<Summary> rel_raw, rel_rdc, rel_ellipse;
    std::vector<Summary> ap;
};

struct EvalReport {
    std::vector<double> thresholds;
    std::vector<ImageEval> images;
    std::map<std::string, Histogram> histograms;  // "reference", "raw", "rdc", "ellipse"

    std::vector<GroupEval> groups() const;
    void write_images_csv(std::ostream& os) const;
    void write_groups_csv(std::ostream& os) const;
    std::string summary_json() const;
};

void write_histogram_csv(std::ostream& os, const Histogram& h);

}  // namespace bubbleid
