#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bubbleid/synthgen.hpp"

namespace bubbleid {

/// Fully connected network with rectifier hidden layers and an identity
/// output. All parameters live in one flat buffer: for every layer the
/// row-major (out x in) weight matrix followed by its bias.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<int> layer_sizes);

    const std::vector<int>& layer_sizes() const noexcept { return sizes_; }
    int layer_count() const noexcept { return static_cast<int>(sizes_.size()) - 1; }
    int input_size() const noexcept { return sizes_.front(); }
    int output_size() const noexcept { return sizes_.back(); }
    int rows(int layer) const noexcept { return sizes_[layer + 1]; }
    int cols(int layer) const noexcept { return sizes_[layer]; }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    std::size_t weight_offset(int layer) const noexcept { return weight_offset_[layer]; }
    std::size_t bias_offset(int layer) const noexcept {
        return weight_offset_[layer] + static_cast<std::size_t>(rows(layer)) * cols(layer);
    }
    std::span<double> weights(int layer) noexcept {
        return {params_.data() + weight_offset(layer), static_cast<std::size_t>(rows(layer)) * cols(layer)};
    }
    std::span<const double> weights(int layer) const noexcept {
        return {params_.data() + weight_offset(layer), static_cast<std::size_t>(rows(layer)) * cols(layer)};
    }
    std::span<double> bias(int layer) noexcept {
        return {params_.data() + bias_offset(layer), static_cast<std::size_t>(rows(layer))};
    }
    std::span<const double> bias(int layer) const noexcept {
        return {params_.data() + bias_offset(layer), static_cast<std::size_t>(rows(layer))};
    }

    std::vector<double> forward(std::span<const double> input) const;

    /// Symmetric uniform init, limit sqrt(6 / fan_in); biases zero.
    void init_uniform(Rng& rng);

    friend bool operator==(const Mlp&, const Mlp&) = default;

private:
    std::vector<int> sizes_;
    std::vector<std::size_t> weight_offset_;
    std::vector<double> params_;
};

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(std::size_t parameter_count, AdamConfig config);

    void step(std::span<double> params, std::span<const double> grad);

    long steps() const noexcept { return t_; }
    std::span<const double> first_moment() const noexcept { return m_; }
    std::span<const double> second_moment() const noexcept { return v_; }

private:
    AdamConfig config_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

}  // namespace bubbleid
