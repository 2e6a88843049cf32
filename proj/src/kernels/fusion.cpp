#include "bubbleid/kernels/fusion.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "bubbleid/kernels/edt.hpp"

namespace bubbleid::kernels {

namespace {

Label nearest_for(const Pixel& p, const std::vector<SeedPixel>& seeds) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    Label best_label = 0;
    for (const SeedPixel& s : seeds) {
        const std::int64_t dr = s.row - p.row, dc = s.col - p.col;
        const std::int64_t d = dr * dr + dc * dc;
        if (d < best || (d == best && s.label < best_label)) {
            best = d;
            best_label = s.label;
        }
    }
    return best_label;
}

struct Nearest2 {
    double d1 = kFar;
    Label id1 = 0;
    double d2 = kFar;
};

void offer(Nearest2& n, double d, Label id) {
    if (d < n.d1) {
        n.d2 = n.d1;
        n.d1 = d;
        n.id1 = id;
    } else if (d < n.d2) {
        n.d2 = d;
    }
}

void weight_row(const LabelMap& labels, const std::vector<InstanceProximity>& prox, int r,
                double sq_threshold, WeightValues values, Raster<float>& out,
                std::vector<Nearest2>& scratch) {
    const int w = labels.width();
    scratch.assign(w, Nearest2{});
    for (const InstanceProximity& p : prox) {
        if (r < p.window.row0 || r > p.window.row1) continue;
        const double* row = p.sq_dist.data() + static_cast<std::size_t>(r - p.window.row0) * p.window.cols();
        for (int c = p.window.col0; c <= p.window.col1; ++c) {
            offer(scratch[c], row[c - p.window.col0], p.id);
        }
    }
    for (int c = 0; c < w; ++c) {
        float v;
        if (labels(r, c) != 0) {
            v = static_cast<float>(values.inside);
        } else if (scratch[c].d1 < sq_threshold && scratch[c].d2 < sq_threshold) {
            v = static_cast<float>(values.gap);
        } else {
            v = static_cast<float>(values.other);
        }
        out(r, c) = v;
    }
}

int margin_for(double threshold) { return static_cast<int>(std::ceil(threshold)) + 1; }

}  // namespace

std::vector<Label> nearest_seed_serial(std::span<const Pixel> targets, std::span<const int> group,
                                       const std::vector<std::vector<SeedPixel>>& candidates) {
    std::vector<Label> out(targets.size(), 0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out[i] = nearest_for(targets[i], candidates[group[i]]);
    }
    return out;
}

std::vector<Label> nearest_seed_omp(std::span<const Pixel> targets, std::span<const int> group,
                                    const std::vector<std::vector<SeedPixel>>& candidates) {
    std::vector<Label> out(targets.size(), 0);
    const long n = static_cast<long>(targets.size());
#pragma omp parallel for schedule(dynamic, 256)
    for (long i = 0; i < n; ++i) out[i] = nearest_for(targets[i], candidates[group[i]]);
    return out;
}

// Distances compared squared; the threshold is strict.
Raster<float> weight_map_serial(const LabelMap& labels, double threshold, WeightValues values) {
    const std::vector<InstanceProximity> prox = instance_proximity_serial(labels, margin_for(threshold));
    Raster<float> out(labels.width(), labels.height(), 0.0f);
    std::vector<Nearest2> scratch;
    for (int r = 0; r < labels.height(); ++r) {
        weight_row(labels, prox, r, threshold * threshold, values, out, scratch);
    }
    return out;
}

Raster<float> weight_map_omp(const LabelMap& labels, double threshold, WeightValues values) {
    const std::vector<InstanceProximity> prox = instance_proximity_omp(labels, margin_for(threshold));
    Raster<float> out(labels.width(), labels.height(), 0.0f);
#pragma omp parallel
    {
        std::vector<Nearest2> scratch;
#pragma omp for schedule(static)
        for (int r = 0; r < labels.height(); ++r) {
            weight_row(labels, prox, r, threshold * threshold, values, out, scratch);
        }
    }
    return out;
}

}  // namespace bubbleid::kernels
