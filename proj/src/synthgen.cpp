#include "bubbleid/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <string>

namespace bubbleid {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kAreaQuadrature = 4096;

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

MaskPatch rasterize_patch(const StarPolygon& poly_px) {
    double r0 = poly_px.center.row, r1 = r0, c0 = poly_px.center.col, c1 = c0;
    for (int i = 0; i < poly_px.k(); ++i) {
        const Point v = poly_px.vertex(i);
        r0 = std::min(r0, v.row);
        r1 = std::max(r1, v.row);
        c0 = std::min(c0, v.col);
        c1 = std::max(c1, v.col);
    }
    MaskPatch patch;
    patch.row0 = static_cast<int>(std::floor(r0));
    patch.col0 = static_cast<int>(std::floor(c0));
    const int h = static_cast<int>(std::ceil(r1)) - patch.row0 + 1;
    const int w = static_cast<int>(std::ceil(c1)) - patch.col0 + 1;
    patch.mask = rasterize(poly_px, w, h, patch.row0, patch.col0);
    return patch;
}

std::size_t count_set(const Mask& m) {
    return static_cast<std::size_t>(std::count_if(m.pixels().begin(), m.pixels().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

double max_radius_px(const BubbleShape& shape, const PixelScale& scale) {
    return scale.to_px(*std::max_element(shape.polygon.radii.begin(), shape.polygon.radii.end()));
}

// Bubble with its full outline inside the canvas (vertex extents within the
// pixel-center range) at a uniformly drawn position.
Point random_inside(Rng& rng, double rmax, int width, int height) {
    return {uniform(rng, rmax, height - 1 - rmax), uniform(rng, rmax, width - 1 - rmax)};
}

bool polygon_inside(const StarPolygon& poly_px, int width, int height) {
    for (int i = 0; i < poly_px.k(); ++i) {
        const Point v = poly_px.vertex(i);
        if (v.row < 0 || v.col < 0 || v.row > height - 1 || v.col > width - 1) return false;
    }
    return true;
}

PlacedBubble place(Label id, const BubbleShape& shape, Point center, const PixelScale& scale) {
    PlacedBubble b;
    b.id = id;
    b.shape = shape;
    b.center = center;
    b.volume_mm3 = bubble_volume(shape);
    b.full = rasterize_patch(b.full_polygon_px(scale));
    b.full_area = count_set(b.full.mask);
    return b;
}

ShapeClass random_class(const SceneConfig& config, Rng& rng) {
    if (config.classes.empty()) throw Error(ErrorKind::InvalidRange, "no shape classes configured");
    std::uniform_int_distribution<std::size_t> pick(0, config.classes.size() - 1);
    return config.classes[pick(rng)];
}

BubbleShape sample_fitting_shape(const SceneConfig& config, Rng& rng) {
    BubbleShape shape = sample_shape(config.size, random_class(config, rng), rng);
    const double rmax = max_radius_px(shape, config.scale);
    if (2.0 * rmax >= std::min(config.width, config.height) - 1) {
        throw Error(ErrorKind::InvalidRange, "bubble of " + std::to_string(shape.equivalent_diameter) +
                                                 " mm does not fit the canvas");
    }
    return shape;
}

void validate_common(const SceneConfig& config) {
    if (config.width <= 0 || config.height <= 0) {
        throw Error(ErrorKind::InvalidRange, "canvas dimensions must be positive");
    }
    if (!(config.depth_mm > 0)) throw Error(ErrorKind::InvalidRange, "depth must be > 0");
    if (config.max_attempts <= 0) throw Error(ErrorKind::InvalidRange, "max_attempts must be > 0");
}

void paint(Scene& scene) {
    scene.labels = LabelMap(scene.width, scene.height, 0);
    for (auto it = scene.bubbles.rbegin(); it != scene.bubbles.rend(); ++it) {
        const MaskPatch& p = it->full;
        for (int r = 0; r < p.mask.height(); ++r) {
            for (int c = 0; c < p.mask.width(); ++c) {
                if (p.mask(r, c) && scene.labels.contains(r + p.row0, c + p.col0)) {
                    scene.labels(r + p.row0, c + p.col0) = it->id;
                }
            }
        }
    }
    const std::vector<std::size_t> areas = instance_areas(scene.labels);
    for (PlacedBubble& b : scene.bubbles) {
        b.visible_area = b.id < areas.size() ? areas[b.id] : 0;
    }
}

bool masks_intersect(const MaskPatch& a, const MaskPatch& b) {
    for (int r = 0; r < a.mask.height(); ++r) {
        for (int c = 0; c < a.mask.width(); ++c) {
            if (a.mask(r, c) && b.covers(r + a.row0, c + a.col0)) return true;
        }
    }
    return false;
}

void finish(Scene& scene) {
    double volume = 0.0;
    for (std::size_t i = 0; i < scene.bubbles.size(); ++i) {
        scene.bubbles[i].depth_rank = static_cast<int>(i);
        volume += scene.bubbles[i].volume_mm3;
    }
    scene.achieved_alpha = volume / scene.domain_volume_mm3();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    // splitmix64 finaliser over the combined key
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::string_view to_string(ShapeClass c) {
    switch (c) {
        case ShapeClass::spherical: return "spherical";
        case ShapeClass::ellipsoidal: return "ellipsoidal";
        case ShapeClass::wobbling: return "wobbling";
    }
    return "spherical";
}

ShapeClass shape_class_from_string(std::string_view s) {
    if (s == "spherical") return ShapeClass::spherical;
    if (s == "ellipsoidal") return ShapeClass::ellipsoidal;
    if (s == "wobbling") return ShapeClass::wobbling;
    throw Error(ErrorKind::Format, "unknown shape class '" + std::string(s) + "'");
}

double BubbleShape::radius_at(double theta) const noexcept {
    const double phi = theta - orientation;
    const double ca = b * std::cos(phi), sa = a * std::sin(phi);
    const double den = std::sqrt(ca * ca + sa * sa);
    const double base = den > 0.0 ? a * b / den : 0.0;
    double mod = 1.0;
    for (int n = 0; n < 3; ++n) mod += wobble[n] * std::cos((n + 2) * theta + phase[n]);
    return base * mod;
}

double BubbleShape::projected_area() const noexcept {
    double sum = 0.0;
    for (int j = 0; j < kAreaQuadrature; ++j) {
        const double r = radius_at(kTwoPi * j / kAreaQuadrature);
        sum += r * r;
    }
    return 0.5 * sum * kTwoPi / kAreaQuadrature;
}

BubbleShape make_shape(ShapeClass shape_class, double a, double b, double orientation,
                       std::array<double, 3> wobble, std::array<double, 3> phase, int k) {
    if (!(a > 0) || !(b > 0) || k < 3) throw Error(ErrorKind::InvalidRange, "invalid shape parameters");
    BubbleShape s;
    s.shape_class = shape_class;
    s.a = std::max(a, b);
    s.b = std::min(a, b);
    s.orientation = orientation;
    s.wobble = wobble;
    s.phase = phase;
    s.polygon.unit = LengthUnit::mm;
    s.polygon.radii.resize(k);
    for (int i = 0; i < k; ++i) s.polygon.radii[i] = s.radius_at(kTwoPi * i / k);
    s.equivalent_diameter = 2.0 * std::sqrt(s.projected_area() / std::numbers::pi);
    return s;
}

BubbleShape sample_shape(SizeRange size, ShapeClass shape_class, Rng& rng) {
    if (!(size.min_mm > 0) || !(size.max_mm >= size.min_mm)) {
        throw Error(ErrorKind::InvalidRange, "size range must be positive and ordered");
    }
    const double d = uniform(rng, size.min_mm, size.max_mm);
    const double r = 0.5 * d;
    if (shape_class == ShapeClass::spherical) return make_shape(shape_class, r, r, 0.0);

    const double aspect = uniform(rng, 0.5, 1.0);
    const double a = r / std::sqrt(aspect);
    const double orientation = uniform(rng, 0.0, std::numbers::pi);
    std::array<double, 3> wobble{}, phase{};
    if (shape_class == ShapeClass::wobbling) {
        for (int n = 0; n < 3; ++n) {
            wobble[n] = uniform(rng, 0.0, 0.08);
            phase[n] = uniform(rng, 0.0, kTwoPi);
        }
    }
    return make_shape(shape_class, a, aspect * a, orientation, wobble, phase);
}

double equivalent_sphere_volume(double area_mm2) noexcept {
    if (!(area_mm2 > 0)) return 0.0;
    const double d = 2.0 * std::sqrt(area_mm2 / std::numbers::pi);
    return std::numbers::pi / 6.0 * d * d * d;
}

double bubble_volume(const BubbleShape& shape) noexcept {
    return equivalent_sphere_volume(shape.projected_area());
}

StarPolygon PlacedBubble::full_polygon_px(const PixelScale& scale) const {
    StarPolygon p = shape.polygon.to_px(scale);
    p.center = center;
    return p;
}

double Scene::domain_volume_mm3() const noexcept {
    return scale.to_mm(width) * scale.to_mm(height) * depth_mm;
}

const PlacedBubble* Scene::find(Label id) const noexcept {
    for (const PlacedBubble& b : bubbles) {
        if (b.id == id) return &b;
    }
    return nullptr;
}

Scene compose_rdc_scene(const SceneConfig& config, std::uint64_t seed) {
    validate_common(config);
    if (config.count_bubbles && *config.count_bubbles != 2 && *config.count_bubbles != 3) {
        throw Error(ErrorKind::InvalidRange, "rdc scenes hold 2 or 3 bubbles");
    }
    Rng rng(seed);
    const int n = config.count_bubbles ? *config.count_bubbles : std::uniform_int_distribution<int>(2, 3)(rng);
    std::vector<BubbleShape> shapes;
    for (int i = 0; i < n; ++i) shapes.push_back(sample_fitting_shape(config, rng));

    for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
        Scene scene;
        scene.width = config.width;
        scene.height = config.height;
        scene.scale = config.scale;
        scene.depth_mm = config.depth_mm;
        scene.seed = seed;

        std::vector<Point> centers;
        bool inside = true;
        for (int i = 0; i < n && inside; ++i) {
            const double ri = max_radius_px(shapes[i], config.scale);
            Point c;
            if (i == 0) {
                c = random_inside(rng, ri, config.width, config.height);
            } else {
                std::uniform_int_distribution<int> pick(0, i - 1);
                const int anchor = pick(rng);
                const double reach = max_radius_px(shapes[anchor], config.scale) + ri;
                const double dist = uniform(rng, 0.0, reach);
                const double ang = uniform(rng, 0.0, kTwoPi);
                c = {centers[anchor].row + dist * std::sin(ang), centers[anchor].col + dist * std::cos(ang)};
            }
            centers.push_back(c);
            StarPolygon poly = shapes[i].polygon.to_px(config.scale);
            poly.center = c;
            inside = polygon_inside(poly, config.width, config.height);
        }
        if (!inside) continue;

        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (int idx : order) {
            scene.bubbles.push_back(place(static_cast<Label>(idx + 1), shapes[idx], centers[idx], config.scale));
        }
        paint(scene);

        bool ok = true;
        for (std::size_t i = 0; i < scene.bubbles.size() && ok; ++i) {
            const PlacedBubble& b = scene.bubbles[i];
            bool overlaps = false;
            for (std::size_t j = 0; j < scene.bubbles.size() && !overlaps; ++j) {
                if (i != j) overlaps = masks_intersect(b.full, scene.bubbles[j].full);
            }
            const double hidden =
                1.0 - static_cast<double>(b.visible_area) / static_cast<double>(b.full_area);
            ok = overlaps && b.full_area > 0 &&
                 (b.visible_area == b.full_area ||
                  (hidden >= config.overlap_min && hidden <= config.overlap_max));
        }
        if (!ok) continue;
        finish(scene);
        return scene;
    }
    throw Error(ErrorKind::PlacementFailure, "rdc scene placement failed after " +
                                                 std::to_string(config.max_attempts) +
                                                 " attempts (seed " + std::to_string(seed) + ")");
}

Scene compose_alpha_scene(const SceneConfig& config, std::uint64_t seed) {
    validate_common(config);
    if (!(config.target_alpha > 0.0) || config.target_alpha > 0.15) {
        throw Error(ErrorKind::InvalidRange, "target alpha must lie in (0, 0.15]");
    }
    Rng rng(seed);
    Scene scene;
    scene.width = config.width;
    scene.height = config.height;
    scene.scale = config.scale;
    scene.depth_mm = config.depth_mm;
    scene.seed = seed;
    scene.target_alpha = config.target_alpha;
    scene.labels = LabelMap(config.width, config.height, 0);
    const double domain = scene.domain_volume_mm3();

    // Visible and full pixel counts indexed by id.
    std::vector<std::size_t> visible{0}, full{0};
    double volume = 0.0;
    std::map<Label, std::size_t> stolen;
    while (volume / domain < config.target_alpha) {
        const BubbleShape shape = sample_fitting_shape(config, rng);
        const double rmax = max_radius_px(shape, config.scale);
        const Label id = static_cast<Label>(visible.size());
        bool placed = false;
        for (int attempt = 0; attempt < config.max_attempts && !placed; ++attempt) {
            PlacedBubble b = place(id, shape, random_inside(rng, rmax, config.width, config.height), config.scale);
            if (!polygon_inside(b.full_polygon_px(config.scale), config.width, config.height)) continue;
            stolen.clear();
            const MaskPatch& p = b.full;
            for (int r = 0; r < p.mask.height(); ++r) {
                for (int c = 0; c < p.mask.width(); ++c) {
                    if (!p.mask(r, c)) continue;
                    const Label under = scene.labels(r + p.row0, c + p.col0);
                    if (under != 0) ++stolen[under];
                }
            }
            const bool keeps_visibility = std::all_of(stolen.begin(), stolen.end(), [&](const auto& kv) {
                const double left = static_cast<double>(visible[kv.first] - kv.second);
                return left >= config.visibility_min * static_cast<double>(full[kv.first]);
            });
            if (!keeps_visibility || b.full_area == 0) continue;

            for (const auto& [under, count] : stolen) visible[under] -= count;
            for (int r = 0; r < p.mask.height(); ++r) {
                for (int c = 0; c < p.mask.width(); ++c) {
                    if (p.mask(r, c)) scene.labels(r + p.row0, c + p.col0) = id;
                }
            }
            visible.push_back(b.full_area);
            full.push_back(b.full_area);
            volume += b.volume_mm3;
            scene.bubbles.insert(scene.bubbles.begin(), std::move(b));
            placed = true;
        }
        if (!placed) {
            throw Error(ErrorKind::PlacementFailure,
                        "alpha scene: bubble " + std::to_string(id) + " could not be placed after " +
                            std::to_string(config.max_attempts) + " attempts (seed " +
                            std::to_string(seed) + ")");
        }
    }
    for (PlacedBubble& b : scene.bubbles) b.visible_area = visible[b.id];
    finish(scene);
    return scene;
}

void rebuild_scene_rasters(Scene& scene) {
    for (PlacedBubble& b : scene.bubbles) {
        b.full = rasterize_patch(b.full_polygon_px(scene.scale));
        b.full_area = count_set(b.full.mask);
        b.volume_mm3 = bubble_volume(b.shape);
    }
    paint(scene);
    finish(scene);
}

Raster<std::uint8_t> render(const Scene& scene, const RenderStyle& style) {
    Raster<std::uint8_t> image(scene.width, scene.height, 0);
    Rng rng(style.seed);
    std::normal_distribution<double> noise(0.0, style.noise_sigma);
    std::vector<const PlacedBubble*> by_id;
    for (const PlacedBubble& b : scene.bubbles) {
        if (by_id.size() <= b.id) by_id.resize(b.id + 1, nullptr);
        by_id[b.id] = &b;
    }
    // The visible label map already encodes painter's order.
    for (int r = 0; r < scene.height; ++r) {
        for (int c = 0; c < scene.width; ++c) {
            double value = style.background;
            const Label id = scene.labels.empty() ? 0 : scene.labels(r, c);
            if (id != 0 && id < by_id.size() && by_id[id] != nullptr) {
                const PlacedBubble& b = *by_id[id];
                const double dr = r - b.center.row, dc = c - b.center.col;
                const double theta = std::atan2(-dr, dc);
                const double local = scene.scale.to_px(b.shape.radius_at(theta));
                const double rho = local > 0 ? std::hypot(dr, dc) / local : 0.0;
                if (rho >= 1.0 - style.rim_width) {
                    value = style.rim;
                } else if (rho <= style.glare_radius) {
                    value = style.glare;
                } else {
                    value = style.interior;
                }
            }
            value += noise(rng);
            image(r, c) = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
    }
    return image;
}

}  // namespace bubbleid
