#include "bubbleid/kernels/edt.hpp"

#include <algorithm>
#include <limits>

namespace bubbleid::kernels {

void sq_edt_1d(std::span<const double> f, std::span<double> out, std::span<int> v,
               std::span<double> z) {
    const int n = static_cast<int>(f.size());
    if (n == 0) return;
    const auto intersect = [&](int q, int p) {
        return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) /
               (2.0 * (q - p));
    };
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = intersect(q, v[k]);
        while (s <= z[k]) {
            --k;
            s = intersect(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double d = static_cast<double>(q - v[k]);
        out[q] = std::min(kFar, d * d + f[v[k]]);
    }
}

std::vector<double> sq_edt_2d(std::span<const std::uint8_t> feature, int width, int height) {
    const std::size_t w = static_cast<std::size_t>(width);
    std::vector<double> grid(feature.size());
    for (std::size_t i = 0; i < feature.size(); ++i) grid[i] = feature[i] ? 0.0 : kFar;

    const int longest = std::max(width, height);
    std::vector<double> f(longest), out(longest), z(longest + 1);
    std::vector<int> v(longest);

    for (int c = 0; c < width; ++c) {
        for (int r = 0; r < height; ++r) f[r] = grid[r * w + c];
        sq_edt_1d(std::span(f).first(height), std::span(out).first(height), v, z);
        for (int r = 0; r < height; ++r) grid[r * w + c] = out[r];
    }
    for (int r = 0; r < height; ++r) {
        std::span<double> row(grid.data() + r * w, w);
        std::copy(row.begin(), row.end(), f.begin());
        sq_edt_1d(std::span(f).first(width), row, v, z);
    }
    return grid;
}

namespace {

// Window = instance box plus a one-pixel ring, which may extend past the
// image edge; ring pixels and every pixel of another label are features.
void instance_edt_into(const LabelMap& labels, Label id, const BoundingBox& box,
                       RealRaster& out) {
    const int wr0 = box.row0 - 1, wc0 = box.col0 - 1;
    const int ww = box.cols() + 2, wh = box.rows() + 2;
    std::vector<std::uint8_t> feature(static_cast<std::size_t>(ww) * wh, 1);
    for (int r = box.row0; r <= box.row1; ++r) {
        for (int c = box.col0; c <= box.col1; ++c) {
            feature[(r - wr0) * ww + (c - wc0)] = labels(r, c) == id ? 0 : 1;
        }
    }
    const std::vector<double> sq = sq_edt_2d(feature, ww, wh);
    for (int r = box.row0; r <= box.row1; ++r) {
        for (int c = box.col0; c <= box.col1; ++c) {
            if (labels(r, c) == id) out(r, c) = sq[(r - wr0) * ww + (c - wc0)];
        }
    }
}

InstanceProximity proximity_for(const LabelMap& labels, Label id, const BoundingBox& box,
                                int margin) {
    InstanceProximity p;
    p.id = id;
    p.window = {std::max(0, box.row0 - margin), std::max(0, box.col0 - margin),
                std::min(labels.height() - 1, box.row1 + margin),
                std::min(labels.width() - 1, box.col1 + margin)};
    const int ww = p.window.cols(), wh = p.window.rows();
    std::vector<std::uint8_t> feature(static_cast<std::size_t>(ww) * wh, 0);
    for (int r = box.row0; r <= box.row1; ++r) {
        for (int c = box.col0; c <= box.col1; ++c) {
            if (labels(r, c) == id) feature[(r - p.window.row0) * ww + (c - p.window.col0)] = 1;
        }
    }
    p.sq_dist = sq_edt_2d(feature, ww, wh);
    return p;
}

struct Work {
    Label id;
    BoundingBox box;
};

std::vector<Work> work_items(const LabelMap& labels) {
    const std::vector<BoundingBox> boxes = instance_boxes(labels);
    std::vector<Work> items;
    for (std::size_t id = 1; id < boxes.size(); ++id) {
        if (boxes[id].valid()) items.push_back({static_cast<Label>(id), boxes[id]});
    }
    return items;
}

}  // namespace

RealRaster instance_sq_edt_serial(const LabelMap& labels) {
    RealRaster out(labels.width(), labels.height(), 0.0);
    for (const Work& w : work_items(labels)) instance_edt_into(labels, w.id, w.box, out);
    return out;
}

RealRaster instance_sq_edt_omp(const LabelMap& labels) {
    RealRaster out(labels.width(), labels.height(), 0.0);
    const std::vector<Work> items = work_items(labels);
    const long n = static_cast<long>(items.size());
    // Each item writes only the pixels of its own instance.
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) instance_edt_into(labels, items[i].id, items[i].box, out);
    return out;
}

std::vector<InstanceProximity> instance_proximity_serial(const LabelMap& labels, int margin) {
    std::vector<InstanceProximity> result;
    for (const Work& w : work_items(labels)) {
        result.push_back(proximity_for(labels, w.id, w.box, margin));
    }
    return result;
}

std::vector<InstanceProximity> instance_proximity_omp(const LabelMap& labels, int margin) {
    const std::vector<Work> items = work_items(labels);
    std::vector<InstanceProximity> result(items.size());
    const long n = static_cast<long>(items.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) result[i] = proximity_for(labels, items[i].id, items[i].box, margin);
    return result;
}

}  // namespace bubbleid::kernels
