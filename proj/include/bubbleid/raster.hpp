#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bubbleid/error.hpp"

namespace bubbleid {

/// Row-major 2-D raster. Pixel (row, col) covers [row-0.5, row+0.5) x
/// [col-0.5, col+0.5); its center sits at integer coordinates.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width <= 0 || height <= 0) {
            throw Error(ErrorKind::InvalidRange, "raster dimensions must be positive");
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int row, int col) const noexcept {
        return row >= 0 && col >= 0 && row < height_ && col < width_;
    }

    T& operator()(int row, int col) noexcept { return data_[index(row, col)]; }
    const T& operator()(int row, int col) const noexcept { return data_[index(row, col)]; }

    std::size_t index(int row, int col) const noexcept {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(col);
    }

    std::span<T> pixels() noexcept { return data_; }
    std::span<const T> pixels() const noexcept { return data_; }

    bool same_shape(int width, int height) const noexcept {
        return width_ == width && height_ == height;
    }
    template <typename U>
    bool same_shape(const Raster<U>& other) const noexcept {
        return same_shape(other.width(), other.height());
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Label = std::uint32_t;
using LabelMap = Raster<Label>;
using Mask = Raster<std::uint8_t>;
using RealRaster = Raster<double>;
using ProbabilityMap = Raster<double>;

struct PixelScale {
    double mm_per_px = 0.05;

    explicit PixelScale(double value = 0.05) : mm_per_px(value) {
        if (!(value > 0.0)) {
            throw Error(ErrorKind::InvalidRange, "pixel scale must be > 0");
        }
    }
    double to_mm(double px) const noexcept { return px * mm_per_px; }
    double to_px(double mm) const noexcept { return mm / mm_per_px; }
    double area_to_mm2(double px2) const noexcept { return px2 * mm_per_px * mm_per_px; }
};

struct Point {
    double row = 0.0;
    double col = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct Pixel {
    int row = 0;
    int col = 0;
    friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

/// Pixel containing a sub-pixel point.
Pixel containing_pixel(Point p) noexcept;

/// Sorted list of the distinct non-zero ids present in the map.
std::vector<Label> instance_ids(const LabelMap& labels);

/// Pixel count per id, indexed by id (entry 0 counts background).
std::vector<std::size_t> instance_areas(const LabelMap& labels);

Mask instance_mask(const LabelMap& labels, Label id);

Mask foreground(const LabelMap& labels);

/// Mean pixel-center coordinate of an instance; throws DegenerateSegment if
/// the id is absent.
Point instance_centroid(const LabelMap& labels, Label id);

struct BoundingBox {
    int row0 = 0, col0 = 0, row1 = -1, col1 = -1;  // inclusive
    bool valid() const noexcept { return row1 >= row0 && col1 >= col0; }
    int rows() const noexcept { return row1 - row0 + 1; }
    int cols() const noexcept { return col1 - col0 + 1; }
};

/// Bounding boxes per id, indexed by id; absent ids have invalid boxes.
std::vector<BoundingBox> instance_boxes(const LabelMap& labels);

}  // namespace bubbleid
