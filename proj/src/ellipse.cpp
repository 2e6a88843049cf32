#include "bubbleid/ellipse.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>

namespace bubbleid {

double Ellipse::area() const noexcept { return std::numbers::pi * a * b; }

Point Ellipse::point_at(double t) const noexcept {
    // Work in (x = col, y = -row) so that theta is a standard math angle.
    const double x = a * std::cos(t), y = b * std::sin(t);
    const double c = std::cos(theta), s = std::sin(theta);
    return {center.row - (x * s + y * c), center.col + (x * c - y * s)};
}

bool Ellipse::contains(Point p) const noexcept {
    const double dx = p.col - center.col, dy = -(p.row - center.row);
    const double c = std::cos(theta), s = std::sin(theta);
    const double u = dx * c + dy * s, v = -dx * s + dy * c;
    return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
}

namespace {

bool in_instance(const LabelMap& labels, int r, int c, Label id) {
    return labels.contains(r, c) && labels(r, c) == id;
}

bool is_contour(const LabelMap& labels, int r, int c, Label id) {
    return !in_instance(labels, r - 1, c, id) || !in_instance(labels, r + 1, c, id) ||
           !in_instance(labels, r, c - 1, id) || !in_instance(labels, r, c + 1, id);
}

bool touches_other(const LabelMap& labels, int r, int c, Label id) {
    for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
            if (!labels.contains(r + dr, c + dc)) continue;
            const Label v = labels(r + dr, c + dc);
            if (v != 0 && v != id) return true;
        }
    }
    return false;
}

std::vector<Pixel> collect_contour(const LabelMap& labels, Label id, bool free_only) {
    std::vector<Pixel> out;
    bool present = false;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            if (labels(r, c) != id) continue;
            present = true;
            if (!is_contour(labels, r, c, id)) continue;
            if (free_only && touches_other(labels, r, c, id)) continue;
            out.push_back({r, c});
        }
    }
    if (!present) {
        throw Error(ErrorKind::DegenerateSegment, "instance " + std::to_string(id) + " is empty");
    }
    return out;
}

// Conic coefficients (A..F) in normalised coordinates -> ellipse.
Ellipse conic_to_ellipse(const Eigen::Matrix<double, 6, 1>& q, double mx, double my, double scale) {
    const double A = q[0], B = q[1], C = q[2], D = q[3], E = q[4], F = q[5];
    Eigen::Matrix2d m;
    m << 2 * A, B, B, 2 * C;
    const Eigen::Vector2d c0 = m.fullPivLu().solve(Eigen::Vector2d(-D, -E));
    const double f0 = F + 0.5 * (D * c0.x() + E * c0.y());
    Eigen::Matrix2d quad;
    quad << A, B / 2, B / 2, C;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(quad);
    const Eigen::Vector2d lam = es.eigenvalues();
    const double s0 = -f0 / lam[0], s1 = -f0 / lam[1];
    if (!(s0 > 0) || !(s1 > 0)) throw Error(ErrorKind::NonEllipseConic, "conic has no real ellipse");
    // Larger semi-axis belongs to the smaller |eigenvalue|.
    const int major = s0 >= s1 ? 0 : 1;
    const Eigen::Vector2d axis = es.eigenvectors().col(major);
    Ellipse e;
    e.a = std::sqrt(std::max(s0, s1)) * scale;
    e.b = std::sqrt(std::min(s0, s1)) * scale;
    double th = std::atan2(axis.y(), axis.x());
    th = std::fmod(th, std::numbers::pi);
    if (th < 0) th += std::numbers::pi;
    if (th >= std::numbers::pi) th -= std::numbers::pi;
    e.theta = th;
    const double x = c0.x() * scale + mx, y = c0.y() * scale + my;
    e.center = {-y, x};
    return e;
}

}  // namespace

std::vector<Pixel> free_contour_points(const LabelMap& labels, Label id) {
    return collect_contour(labels, id, true);
}

std::vector<Pixel> contour_points(const LabelMap& labels, Label id) {
    return collect_contour(labels, id, false);
}

std::vector<Point> boundary_corners(const LabelMap& labels, Label id, std::span<const Pixel> pixels) {
    // Corners are kept in doubled integer coordinates for exact dedup.
    std::set<std::pair<int, int>> corners;
    for (const Pixel& p : pixels) {
        const int r2 = 2 * p.row, c2 = 2 * p.col;
        if (!in_instance(labels, p.row - 1, p.col, id)) {
            corners.insert({r2 - 1, c2 - 1});
            corners.insert({r2 - 1, c2 + 1});
        }
        if (!in_instance(labels, p.row + 1, p.col, id)) {
            corners.insert({r2 + 1, c2 - 1});
            corners.insert({r2 + 1, c2 + 1});
        }
        if (!in_instance(labels, p.row, p.col - 1, id)) {
            corners.insert({r2 - 1, c2 - 1});
            corners.insert({r2 + 1, c2 - 1});
        }
        if (!in_instance(labels, p.row, p.col + 1, id)) {
            corners.insert({r2 - 1, c2 + 1});
            corners.insert({r2 + 1, c2 + 1});
        }
    }
    std::vector<Point> out;
    out.reserve(corners.size());
    for (const auto& [r2, c2] : corners) out.push_back({0.5 * r2, 0.5 * c2});
    return out;
}

Ellipse fit_ellipse(std::span<const Point> points) {
    const std::size_t n = points.size();
    if (n < 5) {
        throw Error(ErrorKind::InsufficientPoints, std::to_string(n) + " points, need at least 5");
    }
    double mx = 0, my = 0;
    for (const Point& p : points) {
        mx += p.col;
        my += -p.row;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double spread = 0;
    for (const Point& p : points) {
        spread += (p.col - mx) * (p.col - mx) + (-p.row - my) * (-p.row - my);
    }
    const double scale = std::sqrt(spread / static_cast<double>(n));
    if (!(scale > 0)) throw Error(ErrorKind::InsufficientPoints, "all points coincide");

    Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero(), s2 = Eigen::Matrix3d::Zero(),
                    s3 = Eigen::Matrix3d::Zero();
    for (const Point& p : points) {
        const double x = (p.col - mx) / scale, y = (-p.row - my) / scale;
        const Eigen::Vector3d quad(x * x, x * y, y * y);
        const Eigen::Vector3d lin(x, y, 1.0);
        s1 += quad * quad.transpose();
        s2 += quad * lin.transpose();
        s3 += lin * lin.transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(s3);
    const Eigen::Vector3d sv = svd.singularValues();
    if (sv[2] < kCollinearityThreshold * sv[0]) {
        throw Error(ErrorKind::InsufficientPoints, "points are collinear");
    }
    const Eigen::Matrix3d t = -s3.ldlt().solve(s2.transpose());
    const Eigen::Matrix3d m = s1 + s2 * t;
    // Premultiply by the inverse of the 4ac - b^2 constraint matrix.
    Eigen::Matrix3d reduced;
    reduced.row(0) = m.row(2) / 2.0;
    reduced.row(1) = -m.row(1);
    reduced.row(2) = m.row(0) / 2.0;

    Eigen::EigenSolver<Eigen::Matrix3d> es(reduced);
    std::optional<Eigen::Vector3d> best;
    double best_lambda = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d v = es.eigenvectors().col(i).real();
        const double cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        const double lambda = std::abs(es.eigenvalues()[i].real());
        if (cond > 0 && lambda < best_lambda) {
            best = v;
            best_lambda = lambda;
        }
    }
    if (!best) throw Error(ErrorKind::NonEllipseConic, "no eigenvector satisfies 4ac - b^2 > 0");
    Eigen::Matrix<double, 6, 1> q;
    q.head<3>() = *best;
    q.tail<3>() = t * *best;
    return conic_to_ellipse(q, mx, my, scale);
}

EllipseReconstruction reconstruct_ellipse(const LabelMap& labels, Label id) {
    const std::vector<Pixel> all = contour_points(labels, id);
    std::vector<Pixel> free;
    for (const Pixel& p : all) {
        if (!touches_other(labels, p.row, p.col, id)) free.push_back(p);
    }
    std::size_t segment_area = 0;
    for (Label v : labels.pixels()) segment_area += v == id ? 1 : 0;
    const double min_area = static_cast<double>(segment_area);

    const auto try_fit = [&](std::span<const Pixel> pixels) -> std::optional<Ellipse> {
        const std::vector<Point> pts = boundary_corners(labels, id, pixels);
        try {
            return fit_ellipse(pts);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::InsufficientPoints || e.kind() == ErrorKind::NonEllipseConic) {
                return std::nullopt;
            }
            throw;
        }
    };

    EllipseReconstruction out;
    const std::optional<Ellipse> first = try_fit(free);
    if (first && first->area() >= min_area) {
        out.ellipse = *first;
        return out;
    }
    out.fallback = true;
    const std::optional<Ellipse> second = try_fit(all);
    if (second && second->area() >= min_area) {
        out.ellipse = *second;
        return out;
    }
    if (!first && !second) {
        throw Error(ErrorKind::DegenerateSegment,
                    "no ellipse could be fitted to instance " + std::to_string(id));
    }
    out.fallback_exhausted = true;
    if (first && second) {
        out.ellipse = first->area() >= second->area() ? *first : *second;
    } else {
        out.ellipse = first ? *first : *second;
    }
    return out;
}

}  // namespace bubbleid
