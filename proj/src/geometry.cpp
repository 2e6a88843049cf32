#include "bubbleid/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bubbleid/kernels/edt.hpp"

namespace bubbleid {

Point ray_direction(int i, int k) noexcept {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    return {-std::sin(theta), std::cos(theta)};
}

Point StarPolygon::vertex(int i) const noexcept {
    const Point d = ray_direction(i, k());
    return {center.row + radii[i] * d.row, center.col + radii[i] * d.col};
}

double StarPolygon::area() const noexcept {
    const int n = k();
    if (n < 3) return 0.0;
    const double wedge = std::sin(2.0 * std::numbers::pi / n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += radii[i] * radii[(i + 1) % n];
    return 0.5 * wedge * sum;
}

StarPolygon StarPolygon::to_mm(const PixelScale& scale) const {
    if (unit == LengthUnit::mm) return *this;
    StarPolygon out = *this;
    for (double& r : out.radii) r = scale.to_mm(r);
    out.unit = LengthUnit::mm;
    return out;
}

StarPolygon StarPolygon::to_px(const PixelScale& scale) const {
    if (unit == LengthUnit::px) return *this;
    StarPolygon out = *this;
    for (double& r : out.radii) r = scale.to_px(r);
    out.unit = LengthUnit::px;
    return out;
}

RealRaster distance_to_background(const LabelMap& labels) {
    RealRaster d = kernels::instance_sq_edt_omp(labels);
    for (double& v : d.pixels()) v = std::sqrt(v);
    return d;
}

ProbabilityMap object_probability(const LabelMap& labels) {
    ProbabilityMap prob = distance_to_background(labels);
    const auto lab = labels.pixels();
    auto p = prob.pixels();
    std::vector<double> peak(instance_areas(labels).size(), 0.0);
    for (std::size_t i = 0; i < lab.size(); ++i) peak[lab[i]] = std::max(peak[lab[i]], p[i]);
    for (std::size_t i = 0; i < lab.size(); ++i) {
        if (lab[i] != 0) p[i] /= peak[lab[i]];
    }
    return prob;
}

namespace {

Label label_at(const LabelMap& labels, Point p) {
    const Pixel px = containing_pixel(p);
    return labels.contains(px.row, px.col) ? labels(px.row, px.col) : Label{0};
}

Point along(Point c, Point d, double t) { return {c.row + t * d.row, c.col + t * d.col}; }

}  // namespace

RayHits march_rays(const LabelMap& labels, Point center, Label id, int k) {
    if (k <= 0) throw Error(ErrorKind::InvalidRange, "ray count must be positive");
    const Pixel cp = containing_pixel(center);
    if (!labels.contains(cp.row, cp.col) || labels(cp.row, cp.col) != id) {
        throw Error(ErrorKind::CenterOutsideInstance,
                    "center pixel (" + std::to_string(cp.row) + "," + std::to_string(cp.col) +
                        ") is not part of instance " + std::to_string(id));
    }
    RayHits hits;
    hits.polygon.center = center;
    hits.polygon.unit = LengthUnit::px;
    hits.polygon.radii.resize(k);
    hits.stop_label.resize(k);
    for (int i = 0; i < k; ++i) {
        const Point d = ray_direction(i, k);
        double t = kRayStep;
        while (label_at(labels, along(center, d, t)) == id) t += kRayStep;
        double lo = t - kRayStep, hi = t;
        for (int it = 0; it < 14; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (label_at(labels, along(center, d, mid)) == id) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hits.polygon.radii[i] = 0.5 * (lo + hi);
        hits.stop_label[i] = label_at(labels, along(center, d, hi));
    }
    return hits;
}

StarPolygon radial_distances(const LabelMap& labels, Point center, Label id, int k) {
    return march_rays(labels, center, id, k).polygon;
}

Mask rasterize(const StarPolygon& poly, int width, int height) {
    return rasterize(poly, width, height, 0, 0);
}

Mask rasterize(const StarPolygon& poly, int width, int height, int origin_row, int origin_col) {
    Mask mask(width, height, 0);
    const int n = poly.k();
    if (n < 3) return mask;
    std::vector<Point> v(n);
    double min_row = 1e300, max_row = -1e300;
    for (int i = 0; i < n; ++i) {
        v[i] = poly.vertex(i);
        min_row = std::min(min_row, v[i].row);
        max_row = std::max(max_row, v[i].row);
    }
    const int r_begin = std::max(0, static_cast<int>(std::ceil(min_row)) - origin_row);
    const int r_end = std::min(height - 1, static_cast<int>(std::floor(max_row)) - origin_row);
    std::vector<double> xs;
    for (int wr = r_begin; wr <= r_end; ++wr) {
        const double y = static_cast<double>(wr + origin_row);
        xs.clear();
        for (int i = 0; i < n; ++i) {
            const Point& a = v[i];
            const Point& b = v[(i + 1) % n];
            if ((a.row <= y && y < b.row) || (b.row <= y && y < a.row)) {
                xs.push_back(a.col + (y - a.row) * (b.col - a.col) / (b.row - a.row));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t j = 0; j + 1 < xs.size(); j += 2) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(xs[j])) - origin_col);
            const int c1 = std::min(width - 1, static_cast<int>(std::floor(xs[j + 1])) - origin_col);
            for (int c = c0; c <= c1; ++c) mask(wr, c) = 1;
        }
    }
    return mask;
}

double iou(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw Error(ErrorKind::DimensionMismatch, "iou: mask sizes differ");
    std::size_t inter = 0, uni = 0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const bool x = pa[i] != 0, y = pb[i] != 0;
        inter += (x && y) ? 1 : 0;
        uni += (x || y) ? 1 : 0;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double polygon_iou(const StarPolygon& a, const StarPolygon& b) {
    double r0 = 1e300, c0 = 1e300, r1 = -1e300, c1 = -1e300;
    for (const StarPolygon* p : {&a, &b}) {
        for (int i = 0; i < p->k(); ++i) {
            const Point v = p->vertex(i);
            r0 = std::min(r0, v.row);
            c0 = std::min(c0, v.col);
            r1 = std::max(r1, v.row);
            c1 = std::max(c1, v.col);
        }
    }
    if (r0 > r1) return 0.0;
    const int orow = static_cast<int>(std::floor(r0)) - 1;
    const int ocol = static_cast<int>(std::floor(c0)) - 1;
    const int h = static_cast<int>(std::ceil(r1)) + 2 - orow;
    const int w = static_cast<int>(std::ceil(c1)) + 2 - ocol;
    return iou(rasterize(a, w, h, orow, ocol), rasterize(b, w, h, orow, ocol));
}

std::vector<std::size_t> nms_polygons(std::span<const ScoredPolygon> candidates,
                                      double overlap_threshold) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return candidates[x].score > candidates[y].score;
    });
    std::vector<std::size_t> kept;
    for (std::size_t idx : order) {
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](std::size_t s) {
            return polygon_iou(candidates[idx].polygon, candidates[s].polygon) > overlap_threshold;
        });
        if (!suppressed) kept.push_back(idx);
    }
    return kept;
}

}  // namespace bubbleid
