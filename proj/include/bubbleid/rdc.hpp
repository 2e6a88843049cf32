#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bubbleid/geometry.hpp"
#include "bubbleid/mlp.hpp"
#include "bubbleid/synthgen.hpp"

namespace bubbleid {

/// One training pair for the radial distance correction: the visible radial
/// distances of a segment and the true distances to the full outline, both
/// in mm and measured from the visible segment's center.
struct RdcSample {
    std::vector<double> input;
    std::vector<double> target;
    std::vector<bool> occluded;  // ray stopped at another instance
    Label id = 0;
};

/// Center used for star encodings of a segment: its centroid, moved to the
/// nearest segment pixel when the centroid falls outside the segment.
Point segment_center(const LabelMap& labels, Label id);

struct ExtractResult {
    std::vector<RdcSample> samples;
    std::size_t skipped = 0;  // bubbles without a visible segment
};

ExtractResult extract_samples(const Scene& scene, int k = kRayCount);

inline constexpr const char* kRdcModelVersion = "bubbleid-rdc/1";

struct TrainConfig {
    AdamConfig adam{};
    int epochs = 200;
    int batch_size = 256;  // <= 0 trains full-batch
    double validation_fraction = 0.0667;
    std::uint64_t seed = 1;
    std::vector<int> layer_sizes{64, 64, 64, 64, 64};
    bool parallel = true;
};

struct EpochLoss {
    int epoch = 0;
    double train = 0.0;       // full training-set MSE after the epoch
    double validation = 0.0;  // validation-set MSE after the epoch
};

struct RdcModel {
    std::string version = kRdcModelVersion;
    Mlp network;
    TrainConfig meta;
    int k() const noexcept { return network.input_size(); }
};

struct TrainResult {
    RdcModel model;
    std::vector<EpochLoss> history;
    std::size_t train_count = 0;
    std::size_t validation_count = 0;
};

/// Number of validation samples for a split of n samples.
std::size_t validation_count(std::size_t n, double fraction);

/// Mini-batch Adam on the mean squared error over all outputs. Samples are
/// shuffled once with the seed; the trailing validation_count() samples of
/// that order are held out. Throws NonFiniteLoss naming the epoch.
TrainResult train(std::span<const RdcSample> samples, const TrainConfig& config);

/// Forward pass with outputs clamped at zero. Inputs must be finite and
/// non-negative.
std::vector<double> predict(const RdcModel& model, std::span<const double> input_mm);

enum class Substitution {
    occluded_only,  // replace flagged rays, never shrinking them
    all_rays,       // take the network output everywhere
};

struct Correction {
    StarPolygon visible;    // mm
    StarPolygon corrected;  // mm
    std::vector<bool> occluded;
};

Correction correct_segment(const RdcModel& model, const LabelMap& labels, Label id,
                           const PixelScale& scale, Substitution mode = Substitution::occluded_only);

inline StarPolygon correct_polygon(const RdcModel& model, const LabelMap& labels, Label id,
                                   const PixelScale& scale,
                                   Substitution mode = Substitution::occluded_only) {
    return correct_segment(model, labels, id, scale, mode).corrected;
}

}  // namespace bubbleid
