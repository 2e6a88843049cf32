#include "bubbleid/rdc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bubbleid/kernels/dense.hpp"

namespace bubbleid {

Point segment_center(const LabelMap& labels, Label id) {
    const Point centroid = instance_centroid(labels, id);
    const Pixel cp = containing_pixel(centroid);
    if (labels.contains(cp.row, cp.col) && labels(cp.row, cp.col) == id) return centroid;
    double best = std::numeric_limits<double>::infinity();
    Point nearest = centroid;
    for (int r = 0; r < labels.height(); ++r) {
        for (int c = 0; c < labels.width(); ++c) {
            if (labels(r, c) != id) continue;
            const double d = (r - centroid.row) * (r - centroid.row) + (c - centroid.col) * (c - centroid.col);
            if (d < best) {
                best = d;
                nearest = {static_cast<double>(r), static_cast<double>(c)};
            }
        }
    }
    return nearest;
}

namespace {

// Full outline of one bubble as a standalone label map (one-pixel margin),
// so rays stop only at its own boundary.
struct LocalMask {
    LabelMap labels;
    int row0 = 0;
    int col0 = 0;
};

LocalMask local_full_mask(const PlacedBubble& b) {
    const Mask& m = b.full.mask;
    LocalMask local{LabelMap(m.width() + 2, m.height() + 2, 0), b.full.row0 - 1, b.full.col0 - 1};
    for (int r = 0; r < m.height(); ++r) {
        for (int c = 0; c < m.width(); ++c) {
            if (m(r, c)) local.labels(r + 1, c + 1) = 1;
        }
    }
    return local;
}

}  // namespace

ExtractResult extract_samples(const Scene& scene, int k) {
    ExtractResult out;
    const double mm = scene.scale.mm_per_px;
    for (const PlacedBubble& b : scene.bubbles) {
        if (b.visible_area == 0) {
            ++out.skipped;
            continue;
        }
        const Point center = segment_center(scene.labels, b.id);
        const RayHits visible = march_rays(scene.labels, center, b.id, k);
        const LocalMask local = local_full_mask(b);
        const StarPolygon truth = radial_distances(
            local.labels, {center.row - local.row0, center.col - local.col0}, 1, k);

        RdcSample s;
        s.id = b.id;
        s.input.resize(k);
        s.target.resize(k);
        s.occluded.resize(k);
        for (int i = 0; i < k; ++i) {
            s.input[i] = visible.polygon.radii[i] * mm;
            s.target[i] = truth.radii[i] * mm;
            s.occluded[i] = visible.stop_label[i] != 0 && visible.stop_label[i] != b.id;
        }
        out.samples.push_back(std::move(s));
    }
    return out;
}

std::size_t validation_count(std::size_t n, double fraction) {
    if (n < 2) return 0;
    const auto v = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(v, 1, n - 1);
}

TrainResult train(std::span<const RdcSample> samples, const TrainConfig& config) {
    if (samples.size() < 2) throw Error(ErrorKind::InvalidRange, "training needs at least 2 samples");
    if (!(config.validation_fraction > 0.0) || config.validation_fraction >= 1.0) {
        throw Error(ErrorKind::InvalidRange, "validation fraction must lie in (0, 1)");
    }
    if (config.epochs < 0) throw Error(ErrorKind::InvalidRange, "epochs must be >= 0");
    TrainResult result;
    result.model.meta = config;
    result.model.network = Mlp(config.layer_sizes);
    Mlp& net = result.model.network;
    const int n_in = net.input_size(), n_out = net.output_size();

    std::vector<double> inputs, targets;
    inputs.reserve(samples.size() * n_in);
    targets.reserve(samples.size() * n_out);
    for (const RdcSample& s : samples) {
        if (static_cast<int>(s.input.size()) != n_in || static_cast<int>(s.target.size()) != n_out) {
            throw Error(ErrorKind::DimensionMismatch, "sample length does not match the network");
        }
        inputs.insert(inputs.end(), s.input.begin(), s.input.end());
        targets.insert(targets.end(), s.target.begin(), s.target.end());
    }
    const kernels::SampleMatrix x{inputs, n_in}, t{targets, n_out};

    Rng rng(config.seed);
    net.init_uniform(rng);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    result.validation_count = validation_count(samples.size(), config.validation_fraction);
    result.train_count = samples.size() - result.validation_count;
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + result.train_count);
    const std::vector<std::size_t> val_idx(order.begin() + result.train_count, order.end());

    const auto loss_of = [&](std::span<const std::size_t> idx) {
        return config.parallel ? kernels::mse_omp(net, x, t, idx) : kernels::mse_serial(net, x, t, idx);
    };

    Adam adam(net.parameter_count(), config.adam);
    std::vector<double> grad(net.parameter_count());
    const std::size_t batch = config.batch_size <= 0
                                  ? train_idx.size()
                                  : std::min<std::size_t>(config.batch_size, train_idx.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.batch_size > 0) std::shuffle(train_idx.begin(), train_idx.end(), rng);
        for (std::size_t begin = 0; begin < train_idx.size(); begin += batch) {
            const std::span<const std::size_t> idx(train_idx.data() + begin,
                                                   std::min(batch, train_idx.size() - begin));
            const double loss = config.parallel ? kernels::mse_gradient_omp(net, x, t, idx, grad)
                                                : kernels::mse_gradient_serial(net, x, t, idx, grad);
            if (!std::isfinite(loss)) {
                throw Error(ErrorKind::NonFiniteLoss, "loss became non-finite in epoch " + std::to_string(epoch + 1));
            }
            adam.step(net.parameters(), grad);
        }
        EpochLoss e{epoch + 1, loss_of(train_idx), loss_of(val_idx)};
        if (!std::isfinite(e.train) || !std::isfinite(e.validation)) {
            throw Error(ErrorKind::NonFiniteLoss, "loss became non-finite in epoch " + std::to_string(epoch + 1));
        }
        result.history.push_back(e);
    }
    return result;
}

std::vector<double> predict(const RdcModel& model, std::span<const double> input_mm) {
    for (double v : input_mm) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::InvalidRange, "radial distances must be finite and non-negative");
        }
    }
    std::vector<double> out = model.network.forward(input_mm);
    for (double& v : out) v = std::max(0.0, v);
    return out;
}

Correction correct_segment(const RdcModel& model, const LabelMap& labels, Label id,
                           const PixelScale& scale, Substitution mode) {
    const Point center = segment_center(labels, id);
    const RayHits hits = march_rays(labels, center, id, model.k());
    Correction c;
    c.visible = hits.polygon.to_mm(scale);
    c.occluded.resize(model.k());
    bool any = false;
    for (int i = 0; i < model.k(); ++i) {
        c.occluded[i] = hits.stop_label[i] != 0 && hits.stop_label[i] != id;
        any = any || c.occluded[i];
    }
    c.corrected = c.visible;
    if (mode == Substitution::occluded_only && !any) return c;
    const std::vector<double> predicted = predict(model, c.visible.radii);
    for (int i = 0; i < model.k(); ++i) {
        if (mode == Substitution::all_rays) {
            c.corrected.radii[i] = predicted[i];
        } else if (c.occluded[i]) {
            c.corrected.radii[i] = std::max(predicted[i], c.visible.radii[i]);
        }
    }
    return c;
}

}  // namespace bubbleid
