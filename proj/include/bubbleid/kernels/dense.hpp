#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bubbleid/mlp.hpp"

namespace bubbleid::kernels {

/// Row-major sample matrix (rows = samples).
struct SampleMatrix {
    std::span<const double> data;
    int width = 0;

    std::span<const double> row(std::size_t i) const noexcept {
        return data.subspan(i * static_cast<std::size_t>(width), static_cast<std::size_t>(width));
    }
};

/// Samples per gradient shard. Shard partial sums are reduced in shard
/// order, so results do not depend on the thread count.
inline constexpr std::size_t kShardSize = 32;

/// Mean squared error over the selected samples and all outputs, plus its
/// gradient with respect to every network parameter (written to `grad`).
double mse_gradient_serial(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                           std::span<const std::size_t> batch, std::span<double> grad);
double mse_gradient_omp(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                        std::span<const std::size_t> batch, std::span<double> grad);

/// Mean squared error only.
double mse_serial(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                  std::span<const std::size_t> batch);
double mse_omp(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
               std::span<const std::size_t> batch);

}  // namespace bubbleid::kernels
