#pragma once

#include <span>
#include <vector>

#include "bubbleid/raster.hpp"

namespace bubbleid::kernels {

/// Exact 1-D squared distance transform (lower envelope of parabolas).
/// `f` holds 0 at feature samples and a large sentinel elsewhere; `out`
/// receives min_q (i - q)^2 + f[q]. `scratch_v` / `scratch_z` must hold at
/// least n and n + 1 entries.
void sq_edt_1d(std::span<const double> f, std::span<double> out, std::span<int> scratch_v,
               std::span<double> scratch_z);

/// Exact squared 2-D transform of a row-major window: distance from each
/// sample to the nearest sample with `feature[i] != 0`. Windows without a
/// feature yield the sentinel.
std::vector<double> sq_edt_2d(std::span<const std::uint8_t> feature, int width, int height);

inline constexpr double kFar = 1e20;

/// Squared Euclidean distance from every instance pixel to the nearest pixel
/// carrying a different label; the image exterior counts as background.
/// Background pixels receive 0.
RealRaster instance_sq_edt_serial(const LabelMap& labels);
RealRaster instance_sq_edt_omp(const LabelMap& labels);

/// Squared distance from pixels near instance `id` to its nearest pixel,
/// restricted to the box grown by `margin` on each side (clipped to the
/// image). Used by the weight map, which only cares about short distances.
struct InstanceProximity {
    Label id = 0;
    BoundingBox window;
    std::vector<double> sq_dist;  // window.rows() x window.cols()
};
std::vector<InstanceProximity> instance_proximity_serial(const LabelMap& labels, int margin);
std::vector<InstanceProximity> instance_proximity_omp(const LabelMap& labels, int margin);

}  // namespace bubbleid::kernels
