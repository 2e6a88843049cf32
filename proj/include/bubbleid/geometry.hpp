#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bubbleid/raster.hpp"

namespace bubbleid {

enum class LengthUnit { px, mm };

/// Direction i of a k-ray star points at angle 2*pi*i/k measured from the
/// +col axis, counter-clockwise as seen on screen (rows grow downward), so
/// its (row, col) step is (-sin, cos).
Point ray_direction(int i, int k) noexcept;

/// Object center plus k radial distances along the fixed ray directions.
struct StarPolygon {
    Point center;
    std::vector<double> radii;
    LengthUnit unit = LengthUnit::px;

    int k() const noexcept { return static_cast<int>(radii.size()); }
    Point vertex(int i) const noexcept;  // meaningful for unit == px
    /// Shoelace area of the vertex polygon, in unit^2.
    double area() const noexcept;
    StarPolygon to_mm(const PixelScale& scale) const;
    StarPolygon to_px(const PixelScale& scale) const;
};

/// Exact Euclidean distance from every instance pixel to the nearest pixel
/// that is background or carries another label. Pixels outside the image
/// count as background.
RealRaster distance_to_background(const LabelMap& labels);

/// distance_to_background normalised per instance by its maximum.
ProbabilityMap object_probability(const LabelMap& labels);

inline constexpr double kRayStep = 0.5;

/// Result of marching the k rays from a center through one instance.
struct RayHits {
    StarPolygon polygon;
    /// Label of the first pixel outside the instance on each ray; 0 for
    /// background or the image exterior.
    std::vector<Label> stop_label;
};

RayHits march_rays(const LabelMap& labels, Point center, Label id, int k);

/// Radial distances (px) from `center` to the boundary of instance `id`:
/// rays advance in 0.5 px steps to the first sample outside the instance and
/// the crossing is refined by bisection on the last step.
StarPolygon radial_distances(const LabelMap& labels, Point center, Label id, int k);

/// Pixels whose centers lie inside the polygon (even-odd rule), on a canvas
/// of the given size. Polygons must be in px.
Mask rasterize(const StarPolygon& poly, int width, int height);

/// Rasterization into a window whose pixel (0,0) sits at image pixel
/// (origin_row, origin_col).
Mask rasterize(const StarPolygon& poly, int width, int height, int origin_row, int origin_col);

double iou(const Mask& a, const Mask& b);

/// IoU of two px polygons, rasterized on the union of their bounding boxes.
double polygon_iou(const StarPolygon& a, const StarPolygon& b);

struct ScoredPolygon {
    StarPolygon polygon;
    double score = 0.0;
};

inline constexpr double kDefaultNmsThreshold = 0.3;

/// Greedy non-maximum suppression; returns indices of kept candidates in
/// selection order (descending score, lower index first on ties).
std::vector<std::size_t> nms_polygons(std::span<const ScoredPolygon> candidates,
                                      double overlap_threshold = kDefaultNmsThreshold);

}  // namespace bubbleid
