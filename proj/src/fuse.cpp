#include "bubbleid/fuse.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <vector>

#include "bubbleid/kernels/fusion.hpp"

namespace bubbleid {

namespace {

constexpr int kNeighbours8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                    {0, 1},   {1, -1}, {1, 0},  {1, 1}};
constexpr int kNeighbours4[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

}  // namespace

GrowResult grow_instances(const LabelMap& seeds, const Mask& foreground) {
    if (!seeds.same_shape(foreground)) {
        throw Error(ErrorKind::DimensionMismatch, "seed map and foreground mask sizes differ");
    }
    const int h = seeds.height(), w = seeds.width();
    GrowResult result{seeds, 0};

    // Component index per unclaimed foreground pixel, -1 elsewhere.
    Raster<int> component(w, h, -1);
    std::vector<Pixel> targets;
    std::vector<int> group;
    std::vector<std::set<Label>> reaching;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (!foreground(r, c) || seeds(r, c) != 0 || component(r, c) >= 0) continue;
            const int id = static_cast<int>(reaching.size());
            reaching.emplace_back();
            std::deque<Pixel> queue{{r, c}};
            component(r, c) = id;
            while (!queue.empty()) {
                const Pixel p = queue.front();
                queue.pop_front();
                targets.push_back(p);
                group.push_back(id);
                for (const auto& d : kNeighbours8) {
                    const int rr = p.row + d[0], cc = p.col + d[1];
                    if (!seeds.contains(rr, cc)) continue;
                    if (seeds(rr, cc) != 0) {
                        reaching[id].insert(seeds(rr, cc));
                    } else if (foreground(rr, cc) && component(rr, cc) < 0) {
                        component(rr, cc) = id;
                        queue.push_back({rr, cc});
                    }
                }
            }
        }
    }

    // Only region pixels with a 4-neighbour outside the region can be the
    // nearest region pixel to an outside point.
    std::vector<std::vector<kernels::SeedPixel>> border_by_label;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const Label v = seeds(r, c);
            if (v == 0) continue;
            bool border = false;
            for (const auto& d : kNeighbours4) {
                const int rr = r + d[0], cc = c + d[1];
                if (!seeds.contains(rr, cc) || seeds(rr, cc) != v) border = true;
            }
            if (!border) continue;
            if (border_by_label.size() <= v) border_by_label.resize(v + 1);
            border_by_label[v].push_back({r, c, v});
        }
    }
    std::vector<std::vector<kernels::SeedPixel>> candidates(reaching.size());
    for (std::size_t g = 0; g < reaching.size(); ++g) {
        for (Label v : reaching[g]) {
            candidates[g].insert(candidates[g].end(), border_by_label[v].begin(), border_by_label[v].end());
        }
    }

    const std::vector<Label> assigned = kernels::nearest_seed_omp(targets, group, candidates);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (assigned[i] == 0) {
            ++result.unreached;
        } else {
            result.labels(targets[i].row, targets[i].col) = assigned[i];
        }
    }
    return result;
}

Raster<float> weight_map(const LabelMap& labels, double d_threshold) {
    if (!(d_threshold > 0)) throw Error(ErrorKind::InvalidRange, "weight map threshold must be > 0");
    return kernels::weight_map_omp(labels, d_threshold, {});
}

}  // namespace bubbleid
