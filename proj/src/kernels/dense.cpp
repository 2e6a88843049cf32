#include "bubbleid/kernels/dense.hpp"

#include <algorithm>

namespace bubbleid::kernels {

namespace {

// Per-layer (in x out) copies of the weights so the forward inner loop runs
// over contiguous outputs.
std::vector<std::vector<double>> transpose_weights(const Mlp& net) {
    std::vector<std::vector<double>> out(net.layer_count());
    for (int l = 0; l < net.layer_count(); ++l) {
        const int n_out = net.rows(l), n_in = net.cols(l);
        const auto w = net.weights(l);
        out[l].resize(w.size());
        for (int o = 0; o < n_out; ++o) {
            for (int i = 0; i < n_in; ++i) {
                out[l][static_cast<std::size_t>(i) * n_out + o] = w[static_cast<std::size_t>(o) * n_in + i];
            }
        }
    }
    return out;
}

// Sum of squared errors over one shard. When `grad` is non-empty, the raw
// gradient of that sum is accumulated into it.
[[gnu::noinline]] double shard_pass(const Mlp& net, const std::vector<std::vector<double>>& wt,
                                    SampleMatrix inputs, SampleMatrix targets,
                                    std::span<const std::size_t> idx, std::span<double> grad) {
    const int layers = net.layer_count();
    const std::size_t n = idx.size();
    std::vector<std::vector<double>> act(layers + 1);
    act[0].resize(n * inputs.width);
    for (std::size_t s = 0; s < n; ++s) {
        const auto row = inputs.row(idx[s]);
        std::copy(row.begin(), row.end(), act[0].begin() + s * inputs.width);
    }
    for (int l = 0; l < layers; ++l) {
        const int n_out = net.rows(l), n_in = net.cols(l);
        const auto b = net.bias(l);
        const double* w = wt[l].data();
        act[l + 1].resize(n * n_out);
        for (std::size_t s = 0; s < n; ++s) {
            const double* x = act[l].data() + s * n_in;
            double* y = act[l + 1].data() + s * n_out;
            std::copy(b.begin(), b.end(), y);
            for (int i = 0; i < n_in; ++i) {
                const double xi = x[i];
                if (xi == 0.0) continue;
                const double* wrow = w + static_cast<std::size_t>(i) * n_out;
                for (int o = 0; o < n_out; ++o) y[o] += xi * wrow[o];
            }
            if (l + 1 < layers) {
                for (int o = 0; o < n_out; ++o) y[o] = std::max(0.0, y[o]);
            }
        }
    }

    const int n_last = net.output_size();
    std::vector<double> delta(n * n_last);
    double sse = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const auto t = targets.row(idx[s]);
        const double* y = act[layers].data() + s * n_last;
        for (int o = 0; o < n_last; ++o) {
            const double d = y[o] - t[o];
            sse += d * d;
            delta[s * n_last + o] = 2.0 * d;
        }
    }
    if (grad.empty()) return sse;

    std::vector<double> next;
    for (int l = layers - 1; l >= 0; --l) {
        const int n_out = net.rows(l), n_in = net.cols(l);
        double* gw = grad.data() + net.weight_offset(l);
        double* gb = grad.data() + net.bias_offset(l);
        const auto w = net.weights(l);
        for (std::size_t s = 0; s < n; ++s) {
            const double* x = act[l].data() + s * n_in;
            const double* d = delta.data() + s * n_out;
            for (int o = 0; o < n_out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                gb[o] += g;
                double* row = gw + static_cast<std::size_t>(o) * n_in;
                for (int i = 0; i < n_in; ++i) row[i] += g * x[i];
            }
        }
        if (l == 0) break;
        next.assign(n * n_in, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            const double* d = delta.data() + s * n_out;
            double* nd = next.data() + s * n_in;
            for (int o = 0; o < n_out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                const double* wrow = w.data() + static_cast<std::size_t>(o) * n_in;
                for (int i = 0; i < n_in; ++i) nd[i] += g * wrow[i];
            }
            const double* a = act[l].data() + s * n_in;
            for (int i = 0; i < n_in; ++i) {
                if (!(a[i] > 0.0)) nd[i] = 0.0;
            }
        }
        delta.swap(next);
    }
    return sse;
}

template <bool Parallel>
double run(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
           std::span<const std::size_t> batch, std::span<double> grad) {
    if (inputs.width != net.input_size() || targets.width != net.output_size()) {
        throw Error(ErrorKind::DimensionMismatch, "sample width does not match the network");
    }
    if (batch.empty()) return 0.0;
    const bool want_grad = !grad.empty();
    const auto wt = transpose_weights(net);
    const std::size_t shards = (batch.size() + kShardSize - 1) / kShardSize;
    std::vector<double> sse(shards, 0.0);
    std::vector<std::vector<double>> partial(want_grad ? shards : 0);
    const long count = static_cast<long>(shards);

#pragma omp parallel for schedule(static) if (Parallel)
    for (long s = 0; s < count; ++s) {
        const std::size_t begin = static_cast<std::size_t>(s) * kShardSize;
        const std::size_t len = std::min(kShardSize, batch.size() - begin);
        std::span<double> g;
        if (want_grad) {
            partial[s].assign(net.parameter_count(), 0.0);
            g = partial[s];
        }
        sse[s] = shard_pass(net, wt, inputs, targets, batch.subspan(begin, len), g);
    }

    const double scale = 1.0 / (static_cast<double>(batch.size()) * net.output_size());
    double total = 0.0;
    for (std::size_t s = 0; s < shards; ++s) total += sse[s];
    if (want_grad) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t s = 0; s < shards; ++s) {
            for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += partial[s][p];
        }
        for (double& g : grad) g *= scale;
    }
    return total * scale;
}

}  // namespace

double mse_gradient_serial(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                           std::span<const std::size_t> batch, std::span<double> grad) {
    return run<false>(net, inputs, targets, batch, grad);
}

double mse_gradient_omp(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                        std::span<const std::size_t> batch, std::span<double> grad) {
    return run<true>(net, inputs, targets, batch, grad);
}

double mse_serial(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
                  std::span<const std::size_t> batch) {
    return run<false>(net, inputs, targets, batch, {});
}

double mse_omp(const Mlp& net, SampleMatrix inputs, SampleMatrix targets,
               std::span<const std::size_t> batch) {
    return run<true>(net, inputs, targets, batch, {});
}

}  // namespace bubbleid::kernels
