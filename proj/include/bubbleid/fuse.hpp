#pragma once

#include <cstddef>

#include "bubbleid/raster.hpp"

namespace bubbleid {

struct GrowResult {
    LabelMap labels;
    /// Foreground pixels that no seed can reach; they stay background.
    std::size_t unreached = 0;
};

/// Grow seed instances into the unclaimed pixels of a foreground mask.
///
/// Unclaimed foreground pixels split into 8-connected components. Every
/// instance with a pixel 8-adjacent to a component reaches all of it (this is
/// where repeated one-pixel dilation rounds end up). Each reached pixel joins
/// the reaching instance with the Euclidean-nearest seed pixel, ties to the
/// lower id. Seed pixels are never relabelled, including seeds outside the
/// foreground.
GrowResult grow_instances(const LabelMap& seeds, const Mask& foreground);

inline constexpr double kWeightMapThreshold = 10.0;

/// Loss weight map: 1 on instance pixels; 10 on background pixels whose
/// nearest and second-nearest distinct instances are both closer than
/// `d_threshold` px; 0.05 elsewhere.
Raster<float> weight_map(const LabelMap& labels, double d_threshold = kWeightMapThreshold);

}  // namespace bubbleid
