#pragma once

#include <span>
#include <vector>

#include "bubbleid/raster.hpp"

namespace bubbleid {

/// Ellipse in pixel coordinates. `theta` is the major-axis angle in [0, pi),
/// measured from +col counter-clockwise on screen (same sense as the star
/// polygon ray directions).
struct Ellipse {
    Point center;
    double a = 0.0;  // semi-major, px
    double b = 0.0;  // semi-minor, px
    double theta = 0.0;

    double area() const noexcept;
    /// Point at eccentric anomaly t.
    Point point_at(double t) const noexcept;
    bool contains(Point p) const noexcept;
};

/// Contour pixels (instance pixels with a 4-neighbour outside the instance)
/// whose 8-neighbourhood holds no pixel of another instance.
std::vector<Pixel> free_contour_points(const LabelMap& labels, Label id);

/// All contour pixels of the instance, free or not.
std::vector<Pixel> contour_points(const LabelMap& labels, Label id);

/// Pixel corners lying on the crack boundary between the given contour
/// pixels and the outside of the instance. These trace the true segment
/// outline, whereas pixel centers sit half a pixel inside it.
std::vector<Point> boundary_corners(const LabelMap& labels, Label id, std::span<const Pixel> pixels);

inline constexpr double kCollinearityThreshold = 1e-10;

/// Direct least-squares conic fit constrained to 4ac - b^2 > 0.
/// Throws InsufficientPoints for < 5 points or a rank-deficient (collinear)
/// scatter system, NonEllipseConic when no ellipse solution exists.
Ellipse fit_ellipse(std::span<const Point> points);

struct EllipseReconstruction {
    Ellipse ellipse;
    bool fallback = false;            // refit on the complete contour
    bool fallback_exhausted = false;  // both fits smaller than the segment
};

/// Fit on the free contour; refit on the complete contour when that fails
/// or yields an ellipse smaller than the segment's pixel area.
EllipseReconstruction reconstruct_ellipse(const LabelMap& labels, Label id);

}  // namespace bubbleid
