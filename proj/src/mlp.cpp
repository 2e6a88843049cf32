#include "bubbleid/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace bubbleid {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw Error(ErrorKind::InvalidRange, "network needs at least two layer sizes");
    std::size_t offset = 0;
    for (int l = 0; l < layer_count(); ++l) {
        if (sizes_[l] <= 0 || sizes_[l + 1] <= 0) {
            throw Error(ErrorKind::InvalidRange, "layer sizes must be positive");
        }
        weight_offset_.push_back(offset);
        offset += static_cast<std::size_t>(rows(l)) * cols(l) + rows(l);
    }
    params_.assign(offset, 0.0);
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != input_size()) {
        throw Error(ErrorKind::DimensionMismatch, "network input has the wrong length");
    }
    std::vector<double> x(input.begin(), input.end()), y;
    for (int l = 0; l < layer_count(); ++l) {
        const auto w = weights(l);
        const auto b = bias(l);
        const int n_out = rows(l), n_in = cols(l);
        y.assign(b.begin(), b.end());
        for (int o = 0; o < n_out; ++o) {
            double acc = 0.0;
            for (int i = 0; i < n_in; ++i) acc += w[static_cast<std::size_t>(o) * n_in + i] * x[i];
            y[o] += acc;
        }
        if (l + 1 < layer_count()) {
            for (double& v : y) v = std::max(0.0, v);
        }
        x.swap(y);
    }
    return x;
}

void Mlp::init_uniform(Rng& rng) {
    for (int l = 0; l < layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / cols(l));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : weights(l)) w = dist(rng);
        for (double& b : bias(l)) b = 0.0;
    }
}

Adam::Adam(std::size_t parameter_count, AdamConfig config)
    : config_(config), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
}

}  // namespace bubbleid
