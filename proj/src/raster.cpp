#include "bubbleid/raster.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleid {

Pixel containing_pixel(Point p) noexcept {
    return {static_cast<int>(std::floor(p.row + 0.5)), static_cast<int>(std::floor(p.col + 0.5))};
}

std::vector<Label> instance_ids(const LabelMap& labels) {
    std::vector<std::size_t> areas = instance_areas(labels);
    std::vector<Label> ids;
    for (std::size_t id = 1; id < areas.size(); ++id) {
        if (areas[id] > 0) ids.push_back(static_cast<Label>(id));
    }
    return ids;
}

std::vector<std::size_t> instance_areas(const LabelMap& labels) {
    Label max_id = 0;
    for (Label v : labels.pixels()) max_id = std::max(max_id, v);
    std::vector<std::size_t> areas(static_cast<std::size_t>(max_id) + 1, 0);
    for (Label v : labels.pixels()) ++areas[v];
    return areas;
}

Mask instance_mask(const LabelMap& labels, Label id) {
    Mask mask(labels.width(), labels.height(), 0);
    auto src = labels.pixels();
    auto dst = mask.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == id ? 1 : 0;
    return mask;
}

Mask foreground(const LabelMap& labels) {
    Mask mask(labels.width(), labels.height(), 0);
    auto src = labels.pixels();
    auto dst = mask.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] != 0 ? 1 : 0;
    return mask;
}

Point instance_centroid(const LabelMap& labels, Label id) {
    double sum_row = 0.0, sum_col = 0.0;
    std::size_t count = 0;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            if (labels(r, c) == id) {
                sum_row += r;
                sum_col += c;
                ++count;
            }
        }
    }
    if (count == 0) {
        throw Error(ErrorKind::DegenerateSegment, "instance " + std::to_string(id) + " is empty");
    }
    return {sum_row / static_cast<double>(count), sum_col / static_cast<double>(count)};
}

std::vector<BoundingBox> instance_boxes(const LabelMap& labels) {
    Label max_id = 0;
    for (Label v : labels.pixels()) max_id = std::max(max_id, v);
    std::vector<BoundingBox> boxes(static_cast<std::size_t>(max_id) + 1,
                                   BoundingBox{labels.height(), labels.width(), -1, -1});
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            BoundingBox& b = boxes[labels(r, c)];
            b.row0 = std::min(b.row0, r);
            b.col0 = std::min(b.col0, c);
            b.row1 = std::max(b.row1, r);
            b.col1 = std::max(b.col1, c);
        }
    }
    return boxes;
}

}  // namespace bubbleid
