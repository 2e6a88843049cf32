#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "bubbleid/geometry.hpp"
#include "bubbleid/raster.hpp"

namespace bubbleid {

using Rng = std::mt19937_64;

/// Independent stream seed for work item `index` of a batch.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

enum class ShapeClass { spherical, ellipsoidal, wobbling };

std::string_view to_string(ShapeClass c);
ShapeClass shape_class_from_string(std::string_view s);

struct SizeRange {
    double min_mm = 2.0;
    double max_mm = 7.0;
};

inline constexpr int kRayCount = 64;

/// Parametric bubble outline: an ellipse modulated by harmonics 2..4,
/// r(theta) = ellipse(a, b, theta - orientation) * (1 + sum c_n cos(n theta + phi_n)).
struct BubbleShape {
    ShapeClass shape_class = ShapeClass::spherical;
    double equivalent_diameter = 0.0;  // mm, nominal
    double a = 0.0;                    // mm
    double b = 0.0;                    // mm
    double orientation = 0.0;          // rad
    std::array<double, 3> wobble{};    // c_2..c_4
    std::array<double, 3> phase{};     // phi_2..phi_4
    StarPolygon polygon;               // mm, centered at the origin

    double radius_at(double theta) const noexcept;
    /// Area enclosed by r(theta), by periodic trapezoid quadrature.
    double projected_area() const noexcept;
};

BubbleShape make_shape(ShapeClass shape_class, double a, double b, double orientation,
                       std::array<double, 3> wobble = {}, std::array<double, 3> phase = {},
                       int k = kRayCount);

/// Random shape with an equivalent diameter drawn uniformly from `size`.
/// Ellipsoidal and wobbling shapes draw b/a from [0.5, 1]; wobbling shapes
/// draw each c_n from [0, 0.08].
BubbleShape sample_shape(SizeRange size, ShapeClass shape_class, Rng& rng);

/// Volume of the sphere with the same projected area.
double equivalent_sphere_volume(double area_mm2) noexcept;
double bubble_volume(const BubbleShape& shape) noexcept;

/// Binary mask stored in a window of the canvas.
struct MaskPatch {
    int row0 = 0;
    int col0 = 0;
    Mask mask;

    bool covers(int row, int col) const noexcept {
        return mask.contains(row - row0, col - col0) && mask(row - row0, col - col0) != 0;
    }
};

struct PlacedBubble {
    Label id = 0;
    BubbleShape shape;
    Point center;          // px
    int depth_rank = 0;    // 0 = frontmost
    double volume_mm3 = 0.0;
    MaskPatch full;
    std::size_t full_area = 0;     // px
    std::size_t visible_area = 0;  // px

    StarPolygon full_polygon_px(const PixelScale& scale) const;
};

/// Synthetic ground truth. `bubbles` is ordered front to back.
struct Scene {
    int width = 0;
    int height = 0;
    PixelScale scale;
    double depth_mm = 30.0;
    double target_alpha = 0.0;
    double achieved_alpha = 0.0;
    std::uint64_t seed = 0;
    std::vector<PlacedBubble> bubbles;
    LabelMap labels;  // visible parts

    double domain_volume_mm3() const noexcept;
    const PlacedBubble* find(Label id) const noexcept;
    Label frontmost() const noexcept { return bubbles.empty() ? 0 : bubbles.front().id; }
};

struct SceneConfig {
    int width = 256;
    int height = 256;
    PixelScale scale{0.05};
    double depth_mm = 30.0;
    double target_alpha = 0.05;
    std::optional<int> count_bubbles;  // rdc scenes: 2 or 3, random when unset
    double visibility_min = 0.10;
    double overlap_min = 0.10;
    double overlap_max = 0.90;
    SizeRange size{};
    std::vector<ShapeClass> classes{ShapeClass::spherical, ShapeClass::ellipsoidal,
                                    ShapeClass::wobbling};
    int k = kRayCount;
    int max_attempts = 10000;
};

/// Two or three bubbles stacked on each other; every occluded bubble loses
/// between overlap_min and overlap_max of its area. Depth order is random.
Scene compose_rdc_scene(const SceneConfig& config, std::uint64_t seed);

/// Bubbles pasted on top of each other at random positions until the gas
/// volume fraction reaches target_alpha; every bubble keeps at least
/// visibility_min of its area visible.
Scene compose_alpha_scene(const SceneConfig& config, std::uint64_t seed);

/// Rebuild masks and visible labels from bubble shapes and centers (used
/// when loading scenes from disk). Bubbles must be ordered front to back.
void rebuild_scene_rasters(Scene& scene);

struct RenderStyle {
    double background = 200.0;
    double interior = 120.0;
    double rim = 45.0;
    double glare = 235.0;
    double rim_width = 0.18;     // fraction of the local radius
    double glare_radius = 0.25;  // fraction of the local radius
    double noise_sigma = 5.0;
    std::uint64_t seed = 0;
};

Raster<std::uint8_t> render(const Scene& scene, const RenderStyle& style);

}  // namespace bubbleid
