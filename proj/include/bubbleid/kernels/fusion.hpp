#pragma once

#include <span>
#include <vector>

#include "bubbleid/raster.hpp"

namespace bubbleid::kernels {

struct SeedPixel {
    int row;
    int col;
    Label label;
};

/// For each target pixel, the label of the nearest candidate seed pixel in
/// its group (squared Euclidean distance, ties to the lower label). Targets
/// whose group has no candidates receive 0.
std::vector<Label> nearest_seed_serial(std::span<const Pixel> targets, std::span<const int> group,
                                       const std::vector<std::vector<SeedPixel>>& candidates);
std::vector<Label> nearest_seed_omp(std::span<const Pixel> targets, std::span<const int> group,
                                    const std::vector<std::vector<SeedPixel>>& candidates);

/// Per-pixel loss weights: `inside` on instance pixels, `gap` where the
/// nearest and second-nearest distinct instances are both closer than
/// `threshold`, `other` elsewhere.
struct WeightValues {
    double gap = 10.0;
    double inside = 1.0;
    double other = 0.05;
};
Raster<float> weight_map_serial(const LabelMap& labels, double threshold, WeightValues values);
Raster<float> weight_map_omp(const LabelMap& labels, double threshold, WeightValues values);

}  // namespace bubbleid::kernels
